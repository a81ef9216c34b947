"""Rock fragment segmentation post-processing, size distributions and segregation analysis."""
from .errors import DataError, EmptyInputError, FragscanError, InsufficientSamplesError, InvalidArgument
from .raster import BACKGROUND, BODY, BOUNDARY

__version__ = "0.1.0"

__all__ = [
    "BACKGROUND", "BODY", "BOUNDARY",
    "DataError", "EmptyInputError", "FragscanError", "InsufficientSamplesError", "InvalidArgument",
]
