"""Exception hierarchy shared by all wavecoh modules."""


class WavecohError(Exception):
    """Base class for every error raised by wavecoh."""


class ConfigError(WavecohError, ValueError):
    """Invalid or unknown configuration value.

    The offending key is kept in ``key`` so callers can report it.
    """

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class DataError(WavecohError, ValueError):
    """Problem with input data: missing files, bad rows, gaps, misalignment."""


class GridMismatchError(WavecohError, ValueError):
    """Two grids or transforms that must agree in shape or scales do not."""


class StageError(WavecohError):
    """Wraps an error raised inside one stage of a pipeline run."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
