"""Exception taxonomy shared by all framesum modules.

Each category maps to one CLI exit code; see cli.EXIT_CODES.
"""


class FramesumError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(FramesumError):
    """Invalid configuration value or incompatible shapes/dims."""


class UsageError(FramesumError):
    """A caller violated an operation's precondition."""


class FormatError(FramesumError):
    """A persistent file is malformed; message names the offset or field."""


class TrainingError(FramesumError):
    """Training diverged or produced non-finite values."""


class SamplingError(FramesumError):
    """A video cannot yield a clip under the requested policy."""


class ScoringError(FramesumError):
    """A video cannot be scored (e.g. shorter than the window)."""


class CheckpointError(FramesumError):
    """Checkpoint payload disagrees with its manifest or model config."""
