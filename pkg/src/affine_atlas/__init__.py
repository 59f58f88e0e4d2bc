"""affine-atlas: joint spectra, classical actions and affine invariants of
model integrable systems."""

from .affine import (
    AffineMapZ,
    Cut,
    CutSpec,
    FixedPoint,
    IsotropyData,
    cut_transform,
    dh_density,
    group_act,
    monodromy_k,
)
from .models import RegionTag, SystemSpec

__all__ = [
    "AffineMapZ",
    "Cut",
    "CutSpec",
    "FixedPoint",
    "IsotropyData",
    "RegionTag",
    "SystemSpec",
    "cut_transform",
    "dh_density",
    "group_act",
    "monodromy_k",
]

__version__ = "0.1.0"
