// One error class per failure category; the CLI maps classes to exit codes.

export class UsageError extends Error {}

export class FormatError extends Error {}

export class ExtractionError extends Error {}

export class ConversionError extends Error {}

export const EXIT_CODES: Array<[new (...args: any[]) => Error, number]> = [
  [UsageError, 2],
  [FormatError, 4],
  [ExtractionError, 5],
  [ConversionError, 6],
];

export function exitCodeFor(err: Error): number {
  for (const [cls, code] of EXIT_CODES) {
    if (err instanceof cls) return code;
  }
  return 1;
}
