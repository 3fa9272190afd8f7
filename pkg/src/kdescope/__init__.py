"""kdescope: kernel density estimation, bandwidth selection and SiZer maps."""

from . import bandwidth, estimators, histogram, kernels, sizer
from .bandwidth import select
from .errors import KdeError
from .estimators import DensityEstimate, kde_at, kde_grid
from .histogram import Histogram, HistogramSpec, build_histogram
from .kernels import IcvKernelParams, Kernel, moments
from .optimize import SearchInterval, SelectorReport
from .sample import Sample
from .sizer import PixelClass, ScaleSpaceGrid, SizerMap, sizer_map

__version__ = "0.1.0"

__all__ = [
    "bandwidth",
    "estimators",
    "histogram",
    "kernels",
    "sizer",
    "select",
    "KdeError",
    "DensityEstimate",
    "kde_at",
    "kde_grid",
    "Histogram",
    "HistogramSpec",
    "build_histogram",
    "IcvKernelParams",
    "Kernel",
    "moments",
    "SearchInterval",
    "SelectorReport",
    "Sample",
    "PixelClass",
    "ScaleSpaceGrid",
    "SizerMap",
    "sizer_map",
]
