"""Exception types shared across the toolkit.

Every error raised on purpose carries a stable, machine-readable ``code``
(e.g. ``"bad-flo-magic"``) so callers and the CLI can match on it without
parsing prose.
"""


class StereoGenError(Exception):
    """Base class for all toolkit errors."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(f"{code}: {detail}" if detail else code)


class CodecError(StereoGenError):
    """Malformed or unsupported on-disk data (PFM / .flo / PNG / latent)."""


class GeometryError(StereoGenError):
    """Degenerate camera geometry, e.g. every point behind the camera."""


class InputError(StereoGenError):
    """Bad user-supplied inputs to the batch CLI (missing files, unpaired
    frames, inconsistent dimensions). Mapped to exit code 2."""
