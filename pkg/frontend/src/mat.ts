// Minimal MATLAB v5 .mat reader: enough to pull real numeric matrices out
// of annotation archives. Supports little-endian files, plain and
// zlib-compressed elements, and numeric array classes; anything else
// (cells, structs, chars, sparse) is skipped by name rather than failed,
// since archives often carry metadata the converter never needs.

import * as zlib from "node:zlib";

import { FormatError } from "./errors.js";

export interface MatMatrix {
  rows: number;
  cols: number;
  /** column-major, as stored */
  data: Float64Array;
}

export interface MatFile {
  matrices: Map<string, MatMatrix>;
  skipped: string[];
}

// data element types
const MI_INT8 = 1, MI_UINT8 = 2, MI_INT16 = 3, MI_UINT16 = 4;
const MI_INT32 = 5, MI_UINT32 = 6, MI_SINGLE = 7, MI_DOUBLE = 9;
const MI_INT64 = 12, MI_UINT64 = 13, MI_MATRIX = 14, MI_COMPRESSED = 15;
const MI_UTF8 = 16;

// array classes
const MX_DOUBLE = 6, MX_SINGLE = 7;
const MX_INT8 = 8, MX_UINT8 = 9, MX_INT16 = 10, MX_UINT16 = 11;
const MX_INT32 = 12, MX_UINT32 = 13;
const NUMERIC_CLASSES = new Set([MX_DOUBLE, MX_SINGLE, MX_INT8, MX_UINT8,
                                 MX_INT16, MX_UINT16, MX_INT32, MX_UINT32]);

function readNumeric(buf: Buffer, type: number, byteLen: number,
                     offset: number, label: string): Float64Array {
  const readers: Record<number, [number, (o: number) => number]> = {
    [MI_INT8]: [1, o => buf.readInt8(o)],
    [MI_UINT8]: [1, o => buf.readUInt8(o)],
    [MI_INT16]: [2, o => buf.readInt16LE(o)],
    [MI_UINT16]: [2, o => buf.readUInt16LE(o)],
    [MI_INT32]: [4, o => buf.readInt32LE(o)],
    [MI_UINT32]: [4, o => buf.readUInt32LE(o)],
    [MI_SINGLE]: [4, o => buf.readFloatLE(o)],
    [MI_DOUBLE]: [8, o => buf.readDoubleLE(o)],
    [MI_INT64]: [8, o => Number(buf.readBigInt64LE(o))],
    [MI_UINT64]: [8, o => Number(buf.readBigUInt64LE(o))],
  };
  const reader = readers[type];
  if (!reader) throw new FormatError(`${label}: numeric element has mi type ${type}`);
  const [width, read] = reader;
  const count = byteLen / width;
  const out = new Float64Array(count);
  for (let i = 0; i < count; i++) out[i] = read(offset + i * width);
  return out;
}

interface Element {
  type: number;
  data: Buffer;
  next: number;
}

function readElement(buf: Buffer, offset: number, label: string): Element {
  if (buf.length < offset + 8) {
    throw new FormatError(`${label}: truncated element tag at offset ${offset}`);
  }
  const first = buf.readUInt32LE(offset);
  const small = first >>> 16;
  if (small !== 0) {
    // small data element: length packed into the tag, data in the next 4 bytes
    return {
      type: first & 0xffff,
      data: buf.subarray(offset + 4, offset + 4 + small),
      next: offset + 8,
    };
  }
  const type = first;
  const byteLen = buf.readUInt32LE(offset + 4);
  if (buf.length < offset + 8 + byteLen) {
    throw new FormatError(
      `${label}: element at offset ${offset} claims ${byteLen} bytes, ` +
      `only ${buf.length - offset - 8} remain`);
  }
  const data = buf.subarray(offset + 8, offset + 8 + byteLen);
  // payloads pad to 8-byte boundaries (compressed elements are exempt)
  const padded = type === MI_COMPRESSED ? byteLen : Math.ceil(byteLen / 8) * 8;
  return { type, data, next: offset + 8 + padded };
}

function parseMatrix(body: Buffer, label: string):
    { name: string; matrix: MatMatrix | null } {
  let pos = 0;
  const flagsEl = readElement(body, pos, label);
  pos = flagsEl.next;
  if (flagsEl.type !== MI_UINT32 || flagsEl.data.length < 8) {
    throw new FormatError(`${label}: matrix missing array-flags subelement`);
  }
  const arrayClass = flagsEl.data.readUInt32LE(0) & 0xff;

  const dimsEl = readElement(body, pos, label);
  pos = dimsEl.next;
  if (dimsEl.type !== MI_INT32) {
    throw new FormatError(`${label}: matrix missing dimensions subelement`);
  }
  const dims: number[] = [];
  for (let o = 0; o < dimsEl.data.length; o += 4) dims.push(dimsEl.data.readInt32LE(o));

  const nameEl = readElement(body, pos, label);
  pos = nameEl.next;
  if (nameEl.type !== MI_INT8 && nameEl.type !== MI_UTF8) {
    throw new FormatError(`${label}: matrix missing name subelement`);
  }
  const name = nameEl.data.toString("utf-8");

  if (!NUMERIC_CLASSES.has(arrayClass) || dims.length !== 2) {
    return { name, matrix: null };
  }
  const realEl = readElement(body, pos, label);
  const data = readNumeric(realEl.data as Buffer, realEl.type, realEl.data.length,
                           0, `${label}:${name}`);
  const [rows, cols] = dims;
  if (data.length !== rows * cols) {
    throw new FormatError(
      `${label}: '${name}' is ${rows}x${cols} but holds ${data.length} values`);
  }
  return { name, matrix: { rows, cols, data } };
}

export function readMat(blob: Buffer, label = "mat"): MatFile {
  if (blob.length < 128) {
    throw new FormatError(`${label}: ${blob.length} bytes is too short for a v5 .mat header`);
  }
  const endian = blob.subarray(126, 128).toString("ascii");
  if (endian === "MI") {
    throw new FormatError(`${label}: big-endian .mat files are not supported`);
  }
  if (endian !== "IM") {
    const head = blob.subarray(0, 8).toString("latin1");
    throw new FormatError(
      `${label}: not a MATLAB v5 file (no endian marker; starts ${JSON.stringify(head)})`);
  }

  const matrices = new Map<string, MatMatrix>();
  const skipped: string[] = [];
  const walk = (buf: Buffer, start: number, what: string) => {
    let pos = start;
    while (pos < buf.length) {
      const el = readElement(buf, pos, what);
      pos = el.next;
      if (el.type === MI_COMPRESSED) {
        let inner: Buffer;
        try {
          inner = zlib.inflateSync(el.data as Buffer);
        } catch (err) {
          throw new FormatError(`${what}: compressed element did not inflate: ` +
                                `${(err as Error).message}`);
        }
        walk(inner, 0, what);
      } else if (el.type === MI_MATRIX) {
        const { name, matrix } = parseMatrix(el.data as Buffer, what);
        if (matrix) matrices.set(name, matrix);
        else skipped.push(name);
      }
      // other root-level element types carry nothing the converter reads
    }
  };
  walk(blob, 128, label);
  return { matrices, skipped };
}

export function matGet(m: MatMatrix, r: number, c: number): number {
  return m.data[c * m.rows + r];
}
