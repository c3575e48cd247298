"""Exception types shared across the toolkit."""


class ScarvoxError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(ScarvoxError):
    """A scalar parameter is out of its valid range (e.g. non-positive tau)."""


class ShapeError(ScarvoxError):
    """Two grids that must share dims/spacing do not."""


class EmptyForegroundError(ScarvoxError):
    """Distance transform of an empty target set is undefined (would be +inf)."""


class OracleSizeError(ScarvoxError):
    """Brute-force oracle called on a grid above its documented size cap."""


class DegenerateMaskError(ScarvoxError):
    """Signed distance map requested for an empty or full-grid mask."""


class EmptyRoiError(ScarvoxError):
    """A loss was asked to average over an empty region."""


class EmptyMaskError(ScarvoxError):
    """A metric that needs a non-empty mask received an empty one."""


class InsufficientVoxelsError(ScarvoxError):
    """A phantom region lacks enough candidate voxels for requested planting."""


class SpecError(ScarvoxError):
    """Phantom parameters describe inconsistent geometry."""


class FormatError(ScarvoxError):
    """A volume file could not be parsed."""


class NonBinaryMaskError(ScarvoxError):
    """A mask file contains values outside {0, 1} and no binarize flag was given."""
