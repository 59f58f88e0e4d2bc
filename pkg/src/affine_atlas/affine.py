"""Integral-affine building blocks: AGL(2,Z) elements, vertical cut shears,
the sign-flip group action on representatives, and the Duistermaat-Heckman
density of an S^1 momentum.

Everything here is exact: points, cut data and map coefficients may be
``fractions.Fraction`` (or ints), in which case all operations stay in Q.
Floats are accepted too; the involution identities then hold bit-exactly
because corrections are applied and removed as the identical float value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence


class AffineError(ValueError):
    """Raised for arguments outside the defined domain of an operation."""


@dataclass(frozen=True)
class AffineMapZ:
    """An element x -> A x + b of AGL(2,Z): A integer with det A = +-1,
    b a 2-vector (rational or float)."""

    matrix: tuple[tuple[int, int], tuple[int, int]]
    translation: tuple[Real, Real] = (0, 0)

    def __post_init__(self):
        (a, b), (c, d) = self.matrix
        for entry in (a, b, c, d):
            if entry != int(entry):
                raise AffineError("matrix entries must be integers")
        if abs(a * d - b * c) != 1:
            raise AffineError("matrix must have determinant +-1")

    @staticmethod
    def identity() -> "AffineMapZ":
        return AffineMapZ(((1, 0), (0, 1)))

    @staticmethod
    def shear(k: int) -> "AffineMapZ":
        """The lower-triangular unipotent [[1,0],[k,1]]."""
        return AffineMapZ(((1, 0), (k, 1)))

    @staticmethod
    def vertical_translation(b: Real) -> "AffineMapZ":
        return AffineMapZ(((1, 0), (0, 1)), (0, b))

    def __call__(self, p: Sequence[Real]) -> tuple[Real, Real]:
        (a, b), (c, d) = self.matrix
        tx, ty = self.translation
        x, y = p
        return (a * x + b * y + tx, c * x + d * y + ty)

    def compose(self, other: "AffineMapZ") -> "AffineMapZ":
        """self after other."""
        (a, b), (c, d) = self.matrix
        (e, f), (g, h) = other.matrix
        m = ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))
        t = self(other.translation)
        return AffineMapZ(m, t)

    def inverse(self) -> "AffineMapZ":
        (a, b), (c, d) = self.matrix
        det = a * d - b * c
        m = ((d * det, -b * det), (-c * det, a * det))
        tx, ty = self.translation
        inv = AffineMapZ(m)
        itx, ity = inv((tx, ty))
        return AffineMapZ(m, (-itx, -ity))

    def preserves_vertical_lines(self) -> bool:
        """Membership in the subgroup T: a vertical shear composed with a
        vertical translation (first coordinate is preserved)."""
        (a, b), (_, d) = self.matrix
        return a == 1 and b == 0 and d == 1 and self.translation[0] == 0


@dataclass(frozen=True)
class Cut:
    """One vertical cut ray: anchored at (x, y), pointing up (eps=+1) or
    down (eps=-1), carrying the rational multiplicity of the marked value."""

    x: Real
    y: Real
    eps: int
    mult: Real = 1

    def __post_init__(self):
        if self.eps not in (-1, 1):
            raise AffineError("eps must be -1 or +1")
        if not math.isfinite(float(self.mult)):
            raise AffineError("mult must be finite")

    def contains(self, point: Sequence[Real]) -> bool:
        px, py = point
        return px == self.x and self.eps * (py - self.y) >= 0


@dataclass(frozen=True)
class CutSpec:
    cuts: tuple[Cut, ...]

    def __post_init__(self):
        xs = [c.x for c in self.cuts]
        if any(xs[i] > xs[i + 1] for i in range(len(xs) - 1)):
            raise AffineError("cuts must be sorted by abscissa")

    def __len__(self):
        return len(self.cuts)

    def __iter__(self):
        return iter(self.cuts)


@dataclass(frozen=True)
class FixedPoint:
    """Interior fixed point of the S^1 action: J-value and signed isotropy
    weights, so 1/(m*n) is the slope increment of the DH density."""

    y: float
    m: int
    n: int


@dataclass(frozen=True)
class IsotropyData:
    """Fixed-point data of the S^1 action needed for the DH density.

    a_min/a_max are the symplectic areas (over 2*pi) of the extremal sets,
    e_min/e_max their self-intersection terms (1/(nm) for isolated extrema
    in the orientation that makes the density correct), y's the J-values.
    A non-compact side is encoded by y_max = +inf with a_max = e_max = 0.
    """

    y_min: float
    y_max: float
    a_min: float = 0.0
    a_max: float = 0.0
    e_min: Real = 0
    e_max: Real = 0
    fixed_points: tuple[FixedPoint, ...] = ()

    def __post_init__(self):
        for p in self.fixed_points:
            if not (self.y_min <= p.y <= self.y_max):
                raise AffineError("interior fixed point outside [y_min, y_max]")
            if math.gcd(abs(p.m), abs(p.n)) != 1:
                raise AffineError("isotropy weights must be coprime")


def cut_transform(k: Real, x_c: Real, p: Sequence[Real]) -> tuple[Real, Real]:
    """Vertical shear localized right of the line x = x_c.

    Points with x <= x_c are fixed; a point to the right gains k*(x - x_c)
    in height. Exact over Fractions; over floats the left branch returns
    the input unchanged.
    """
    x, y = p
    if x <= x_c:
        return (x, y)
    return (x, y + k * (x - x_c))


def group_act(
    u: Sequence[int],
    points: Iterable[Sequence[Real]],
    cuts: CutSpec,
) -> tuple[list[tuple[Real, Real]], CutSpec]:
    """Act with the sign-flip group element u in {0,1}^n on a representative.

    Flipping cut i (u_i = 1) composes with the localised shear of exponent
    u_i * eps_i * mult_i at that cut's abscissa and reverses the cut's sign.
    Acting twice with the same u is the identity, bit-exactly.
    """
    u = list(u)
    if len(u) != len(cuts):
        raise AffineError("sign-flip vector length != number of cuts")
    if any(ui not in (0, 1) for ui in u):
        raise AffineError("sign-flip entries must be 0 or 1")

    out = []
    for p in points:
        q = tuple(p)
        for ui, c in zip(u, cuts):
            if ui:
                q = cut_transform(ui * c.eps * c.mult, c.x, q)
        out.append(q)
    new_cuts = tuple(
        replace(c, eps=-c.eps) if ui else c for ui, c in zip(u, cuts)
    )
    return out, CutSpec(new_cuts)


def monodromy_k(cuts: CutSpec, c: Sequence[Real]) -> Real:
    """Shear exponent k(c) accumulated at a point on the cut locus:
    the sum of eps_j * mult_j over every cut whose ray contains c."""
    hits = [cut for cut in cuts if cut.contains(c)]
    if not hits:
        raise AffineError(f"point {tuple(c)} lies on no cut ray")
    return sum(cut.eps * cut.mult for cut in hits)


def _heaviside(x: float) -> float:
    return 1.0 if x >= 0 else 0.0


def _ramp(x: float) -> float:
    return x if x >= 0 else 0.0


def dh_density(data: IsotropyData, y: float) -> float:
    """Duistermaat-Heckman density of the S^1 momentum at level y.

    Piecewise linear: steps by the extremal areas, ramps by the extremal
    self-intersections and by 1/(m n) at each interior fixed point.
    """
    y = float(y)
    rho = data.a_min * _heaviside(y - data.y_min)
    rho -= float(data.e_min) * _ramp(y - data.y_min)
    for p in data.fixed_points:
        rho += (1.0 / (p.m * p.n)) * _ramp(y - p.y)
    if math.isfinite(data.y_max):
        rho -= float(data.e_max) * _ramp(y - data.y_max)
        rho -= data.a_max * _heaviside(y - data.y_max)
        if y > data.y_max:
            return 0.0
    if y < data.y_min:
        return 0.0
    return rho
