"""simcull: near-duplicate image detection and dataset curation."""

from .matcher import KERNEL_IMPLEMENTATION

__version__ = "0.1.0"
__all__ = ["KERNEL_IMPLEMENTATION", "__version__"]
