"""The model systems: Hamiltonians, reduced-space curves, admissible roots,
region classification, chart vector fields and bifurcation sets.

Six of the seven systems live on a Hirzebruch surface realised as the
T^2-reduction of C^4 at a fixed level of N = (I1+I2+n*I3, I3+I4); the
modified Jaynes-Cummings model lives on R^2 x S^2. For each system the
S^1-reduced fiber at a value (j, h) is cut out by a single polynomial in one
reduced variable, whose admissible roots drive everything downstream:
classification, initial conditions and the action integrals.

Sign conventions: angles evolve by phi_k' = +dH/dI_k (so the flow of J
advances every angle of its circle action by +1). The paper-trail for this
choice is in the project notes; it is the one that closes the homology
cycles by flowing each auxiliary circle action backwards by the reached
angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .affine import FixedPoint, IsotropyData
from .polyroots import real_roots_in_interval

KINDS = (
    "JCModified",
    "HirzebruchToric",
    "FlapTwoEE",
    "Pleat",
    "CurledTori",
    "CurledToriFlap",
    "FamilyABC",
)

# region labels; layer 0 is the background sheet
REGION_LABELS = (
    "Outside",
    "FlapBackground",
    "FlapTop",
    "PleatLower",
    "PleatUpper",
    "CurledLeft",
    "CurledRight",
    "GenFlapBackground",
    "GenFlapTop",
)


class ModelError(ValueError):
    pass


class OutsideImageError(ModelError):
    """(j, h) has no admissible root: the value is outside the momentum image."""


class IndeterminateRegionError(ModelError):
    """Too close to the discriminant for root-count classification."""

    def __init__(self, msg, separation):
        super().__init__(msg)
        self.separation = separation


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown system kind {self.kind!r}")

    def param(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise ModelError(f"system {self.kind} has no parameter {name!r}")

    # -- constructors for the parameter choices actually used --------------

    @staticmethod
    def jc_modified(gamma: float = 0.8) -> "SystemSpec":
        return SystemSpec("JCModified", (("gamma", float(gamma)),))

    @staticmethod
    def hirzebruch(alpha: float = 1.0, beta: float = 1.0, n: int = 1) -> "SystemSpec":
        return SystemSpec(
            "HirzebruchToric",
            (("alpha", float(alpha)), ("beta", float(beta)), ("n", float(n))),
        )

    @staticmethod
    def flap_two_ee(t: float = 0.44) -> "SystemSpec":
        return SystemSpec("FlapTwoEE", (("t", float(t)),))

    @staticmethod
    def pleat(t: float = 1.0) -> "SystemSpec":
        return SystemSpec("Pleat", (("t", float(t)),))

    @staticmethod
    def curled_tori() -> "SystemSpec":
        return SystemSpec("CurledTori")

    @staticmethod
    def curled_tori_flap() -> "SystemSpec":
        return SystemSpec("CurledToriFlap")

    @staticmethod
    def family_abc(a: float, b: float, c: float) -> "SystemSpec":
        return SystemSpec(
            "FamilyABC", (("a", float(a)), ("b", float(b)), ("c", float(c)))
        )


@dataclass(frozen=True)
class RegionTag:
    label: str
    layer: int = 0

    def __post_init__(self):
        if self.label not in REGION_LABELS:
            raise ModelError(f"unknown region label {self.label!r}")


@dataclass(frozen=True)
class ReducedCurve:
    """Defining polynomial of the reduced fiber, coefficients ascending in
    the reduced variable, with the admissible interval."""

    coeffs: tuple[float, ...]
    bounds: tuple[float, float]
    var: str

    def __call__(self, r):
        return np.polyval(self.coeffs[::-1], r)


@dataclass
class OrbitState:
    """Chart state: symplectic-polar actions and unwrapped angles, plus the
    running primitive integral along the orbit."""

    actions: tuple[float, ...]
    angles: tuple[float, ...]
    alpha_accum: float = 0.0


# ---------------------------------------------------------------------------
# system constants


def levels(system: SystemSpec) -> tuple[float, float]:
    """Reduction level (N1, N2) of the ambient C^4 torus action."""
    if system.kind == "Pleat":
        return (2.02, 1.0)
    if system.kind in ("FlapTwoEE", "CurledTori", "CurledToriFlap", "FamilyABC"):
        return (3.0, 1.0)
    raise ModelError(f"{system.kind} is not a reduced C^4 system")


def j_range(system: SystemSpec) -> tuple[float, float]:
    kind = system.kind
    if kind == "JCModified":
        return (-1.0, math.inf)
    if kind == "HirzebruchToric":
        a, b, n = system.param("alpha"), system.param("beta"), system.param("n")
        return (0.0, a + n * b)
    if kind in ("FlapTwoEE", "FamilyABC"):
        return (0.0, 3.0)
    if kind in ("CurledTori", "CurledToriFlap"):
        return (0.0, 3.0)
    if kind == "Pleat":
        return (0.0, 2.02)
    raise ModelError(kind)


def isotropy_data(system: SystemSpec) -> IsotropyData:
    """Tabulated S^1 fixed-point data (weights signed so that 1/(mn) is the
    DH-density slope increment at the fixed value)."""
    kind = system.kind
    if kind == "JCModified":
        return IsotropyData(
            y_min=-1.0, y_max=math.inf, a_min=0.0, e_min=-1,
            fixed_points=(FixedPoint(1.0, 1, -1),),
        )
    if kind == "HirzebruchToric":
        a = system.param("alpha")
        b = system.param("beta")
        n = int(system.param("n"))
        if n == 0:
            return IsotropyData(y_min=0.0, y_max=a, a_min=b, a_max=b)
        return IsotropyData(
            y_min=0.0, y_max=a + n * b, a_min=b, a_max=0.0,
            e_min=0, e_max=-1.0 / n,
            fixed_points=(FixedPoint(a, 1, -n),),
        )
    if kind in ("FlapTwoEE", "FamilyABC"):
        return IsotropyData(
            y_min=0.0, y_max=3.0, e_min=-1, e_max=-1,
            fixed_points=(FixedPoint(1.0, 1, -1), FixedPoint(2.0, 1, -1)),
        )
    if kind in ("CurledTori", "CurledToriFlap"):
        return IsotropyData(
            y_min=0.0, y_max=3.0, a_min=1.0, e_max=-0.5,
            fixed_points=(FixedPoint(1.0, 1, -2),),
        )
    if kind == "Pleat":
        return IsotropyData(
            y_min=0.0, y_max=2.02, a_min=1.0, e_max=-1.0,
            fixed_points=(FixedPoint(1.02, 1, -1),),
        )
    raise ModelError(kind)


def rank0_interior_values(system: SystemSpec) -> list[tuple[float, float, float]]:
    """Images (x, y, m) of the rank-0 critical values in the interior of the
    momentum image, with the monodromy multiplicity m = sum 1/(m_p n_p)
    (unsigned convention of the cut bookkeeping)."""
    kind = system.kind
    if kind == "JCModified":
        return [(1.0, system.param("gamma"), 1.0)]
    if kind == "FlapTwoEE":
        t = system.param("t")
        return [(1.0, 1.0 - 2.0 * t, 1.0), (2.0, 1.0, 1.0)]
    if kind == "FamilyABC":
        a, b, c = (system.param(k) for k in "abc")
        return [(1.0, a + b + c, 1.0), (2.0, a + b + c, 1.0)]
    if kind == "CurledTori":
        return [(1.0, 0.0, 0.5)]
    if kind == "CurledToriFlap":
        return [(1.0, 0.75, 0.5)]
    if kind in ("Pleat", "HirzebruchToric"):
        return []
    raise ModelError(kind)


# ---------------------------------------------------------------------------
# reduced curves


def reduced_curve(system: SystemSpec, j: float, h: float) -> ReducedCurve:
    kind = system.kind
    if kind == "JCModified":
        g = system.param("gamma")
        # 2(j-z)(1-z^2) - 4(h - g z^2)^2
        coeffs = (
            2.0 * j - 4.0 * h * h,
            -2.0,
            -2.0 * j + 8.0 * h * g,
            2.0,
            -4.0 * g * g,
        )
        return ReducedCurve(coeffs, (-1.0, min(j, 1.0)), "z")
    if kind == "FlapTwoEE":
        t = system.param("t")
        # (2j-1-R)(R-1)(R+1)(2j-5+R) - 400/(81 t^2) * (3h-4jt+6tR^2+R(-3+6t-2jt))^2
        q = np.array([1.0])
        for lin in ((-1.0 + 2.0 * j, -1.0), (-1.0, 1.0), (1.0, 1.0), (-5.0 + 2.0 * j, 1.0)):
            q = np.polymul(q, np.array(lin[::-1]))
        lin2 = np.array([6.0 * t, -3.0 + 6.0 * t - 2.0 * j * t, 3.0 * h - 4.0 * j * t])
        q = np.polysub(q, (400.0 / (81.0 * t * t)) * np.polymul(lin2, lin2))
        hi = min(1.0, 2.0 * j - 1.0, 5.0 - 2.0 * j)
        return ReducedCurve(tuple(q[::-1]), (-1.0, hi), "R")
    if kind == "Pleat":
        t = system.param("t")
        n1, _ = levels(system)
        c0 = 2.0 * n1 - 2.0 * j
        # (c0-r) r (2-r) - (h - (1-2t) r/2 - 2t (c0-r) r)^2, section X = pi5
        s = np.polymul(np.array([-1.0, c0]), np.polymul(np.array([1.0, 0.0]), np.array([-1.0, 2.0])))
        inner = np.polysub(
            np.array([h]),
            np.polyadd(np.array([(1.0 - 2.0 * t) / 2.0, 0.0]),
                       2.0 * t * np.polymul(np.array([-1.0, c0]), np.array([1.0, 0.0]))),
        )
        p = np.polysub(s, (1.0 / (t * t)) * np.polymul(inner, inner)) if t != 0 else s
        # for t=1 the paper's S(j,h); general t scales the X-coefficient
        hi = min(2.0, c0)
        return ReducedCurve(tuple(p[::-1]), (0.0, hi), "pi3")
    if kind in ("CurledTori", "CurledToriFlap"):
        # 16 R (1-R) (3-j-2R)^2 - X(R)^2 with X = h (curled) or 4h-3R (flap)
        base = 16.0 * np.polymul(
            np.polymul(np.array([1.0, 0.0]), np.array([-1.0, 1.0])),
            np.polymul(np.array([-2.0, 3.0 - j]), np.array([-2.0, 3.0 - j])),
        )
        if kind == "CurledTori":
            xpoly = np.array([h])
        else:
            xpoly = np.array([-3.0, 4.0 * h])
        p = np.polysub(base, np.polymul(xpoly, xpoly))
        hi = min(1.0, (3.0 - j) / 2.0)
        return ReducedCurve(tuple(p[::-1]), (0.0, hi), "R")
    if kind == "FamilyABC":
        a, b, c = (system.param(k) for k in "abc")
        # 16 (3-j-R)(j-R) R (1-R) - 2 (h - aR - bR^2 - cR^3)^2
        base = 16.0 * np.polymul(
            np.polymul(np.array([-1.0, 3.0 - j]), np.array([-1.0, j])),
            np.polymul(np.array([1.0, 0.0]), np.array([-1.0, 1.0])),
        )
        inner = np.array([-c, -b, -a, h])
        p = np.polysub(base, 2.0 * np.polymul(inner, inner))
        hi = min(1.0, j, 3.0 - j)
        return ReducedCurve(tuple(p[::-1]), (0.0, hi), "R")
    raise ModelError(f"{kind} has no reduced curve")


def admissible_roots(curve: ReducedCurve) -> tuple[np.ndarray, np.ndarray]:
    """All real roots of the curve inside its admissible interval, ascending,
    deduplicated at 1e-10, with tangency multiplicities."""
    lo, hi = curve.bounds
    if hi < lo:
        return np.empty(0), np.empty(0, dtype=int)
    return real_roots_in_interval(curve.coeffs, lo, hi)


def _pair_intervals(curve: ReducedCurve, roots: np.ndarray) -> list[tuple[float, float]]:
    """Consecutive root pairs bounding the components (P >= 0 inside)."""
    pairs = []
    for i in range(len(roots) - 1):
        a, b = roots[i], roots[i + 1]
        if curve(0.5 * (a + b)) > 0.0:
            pairs.append((a, b))
    return pairs


def region_classify(system: SystemSpec, j: float, h: float) -> RegionTag:
    """Tag of the background-layer component at a regular value.

    Raises ``IndeterminateRegionError`` closer than 1e-6 to a fold and
    ``OutsideImageError`` when no admissible root exists.
    """
    if system.kind == "HirzebruchToric":
        raise ModelError("HirzebruchToric needs no region classification")
    curve = reduced_curve(system, j, h)
    roots, mult = admissible_roots(curve)
    if len(roots) == 0:
        raise OutsideImageError(f"({j}, {h}) outside the momentum image")
    sep = np.min(np.diff(roots)) if len(roots) > 1 else math.inf
    if sep < 1e-6 or np.any(mult > 1):
        raise IndeterminateRegionError(
            f"({j}, {h}) within {sep:.2e} of the discriminant", sep
        )
    pairs = _pair_intervals(curve, roots)
    n = len(pairs)
    kind = system.kind
    if n == 0:
        raise OutsideImageError(f"({j}, {h}) outside the momentum image")
    if kind == "CurledTori":
        if 1.0 < j < 3.0 and n == 1:
            return RegionTag("CurledRight" if h > 0 else "CurledLeft", 0)
        return RegionTag("Outside", 0)
    if n == 1:
        return RegionTag("Outside", 0)
    if kind == "Pleat":
        return RegionTag("PleatLower", 0)
    if kind == "CurledToriFlap":
        return RegionTag("GenFlapBackground", 0)
    return RegionTag("FlapBackground", 0)


def component_tags(system: SystemSpec, j: float, h: float) -> list[RegionTag]:
    """Tags of every fiber component over (j, h), bottom pair first."""
    base = region_classify(system, j, h)
    curve = reduced_curve(system, j, h)
    roots, _ = admissible_roots(curve)
    n = len(_pair_intervals(curve, roots))
    if n == 1:
        return [base]
    if system.kind == "Pleat":
        tags = [RegionTag("PleatLower", 0), RegionTag("PleatUpper", 0)]
    elif system.kind == "CurledToriFlap":
        tags = [RegionTag("GenFlapBackground", 0), RegionTag("GenFlapTop", 1)]
    else:
        tags = [RegionTag("FlapBackground", 0), RegionTag("FlapTop", 1)]
    if n > 2:
        tags += [RegionTag("FlapTop", layer) for layer in range(2, n)]
    return tags[:n]


def component_interval(
    system: SystemSpec, j: float, h: float, component: RegionTag
) -> tuple[float, float]:
    """Root pair bounding the requested component's reduced orbit."""
    curve = reduced_curve(system, j, h)
    roots, _ = admissible_roots(curve)
    pairs = _pair_intervals(curve, roots)
    if not pairs:
        raise OutsideImageError(f"({j}, {h}) outside the momentum image")
    tags = component_tags(system, j, h)
    for tag, pair in zip(tags, pairs):
        if tag.label == component.label:
            return pair
    if len(pairs) == 1 and component.label in (
        "Outside", "CurledLeft", "CurledRight", "FlapBackground",
        "GenFlapBackground", "PleatLower", "PleatUpper",
    ):
        return pairs[0]
    raise ModelError(f"component {component.label} absent at ({j}, {h})")


# ---------------------------------------------------------------------------
# chart Hamiltonians, section invariants, initial conditions


def hamiltonian_polar(system: SystemSpec, actions: Sequence[float], angles: Sequence[float]) -> float:
    kind = system.kind
    if kind == "JCModified":
        g = system.param("gamma")
        big_i, z = actions
        phi, theta = angles
        return 0.5 * math.sqrt(max(2.0 * big_i * (1.0 - z * z), 0.0)) * math.cos(phi - theta) + g * z * z
    i1, i2, i3, i4 = actions
    p1, p2, p3, p4 = angles
    amp = 4.0 * math.sqrt(max(i1 * i2 * i3 * i4, 0.0))
    if kind == "FlapTwoEE":
        t = system.param("t")
        x = amp * math.cos(-p1 - p2 + p3 - p4)
        r = i3 - i4
        jj = i2 + i3
        return (1.0 - t) * r + (t / 3.0) * (0.45 * x + (2.0 * jj - 3.0) * (r + 2.0)) + 8.0 * t * i3 * i4
    if kind == "FamilyABC":
        a, b, c = (system.param(k) for k in "abc")
        x = amp * math.cos(p1 + p2 - p3 + p4)
        r = i3
        return a * r + b * r * r + c * r ** 3 + x / math.sqrt(2.0)
    if kind in ("CurledTori", "CurledToriFlap"):
        x = 4.0 * i1 * math.sqrt(max(i3 * i4, 0.0)) * math.cos(-2.0 * p1 + p3 - p4)
        if kind == "CurledTori":
            return x
        return 0.75 * i3 + 0.25 * x
    if kind == "Pleat":
        t = system.param("t")
        x = 2.0 * math.sqrt(max(2.0 * i1 * i3 * i4, 0.0)) * math.cos(-p1 + p3 - p4)
        return (1.0 - 2.0 * t) * i3 + t * x + 8.0 * t * i1 * i3
    raise ModelError(kind)


def momentum_polar(system: SystemSpec, actions: Sequence[float]) -> float:
    kind = system.kind
    if kind == "JCModified":
        return actions[0] + actions[1]
    if kind in ("FlapTwoEE", "FamilyABC"):
        return actions[1] + actions[2]
    return actions[1]


_CHART_FLOOR = 1e-12


def vector_field(system: SystemSpec, state: OrbitState) -> OrbitState:
    """Hamilton's equations in the polar chart, plus the alpha-integrand.

    Raises ``ModelError`` when an action coordinate appearing in a
    denominator is below 1e-12 (chart boundary).
    """
    kind = system.kind
    acts = state.actions
    angs = state.angles
    if kind == "JCModified":
        g = system.param("gamma")
        big_i, z = acts
        phi, theta = angs
        if big_i < _CHART_FLOOR or 1.0 - z * z < _CHART_FLOOR:
            raise ModelError("chart boundary: action coordinate below 1e-12")
        root = math.sqrt(2.0 * big_i * (1.0 - z * z))
        cosd = math.cos(phi - theta)
        sind = math.sin(phi - theta)
        di = 0.5 * root * sind
        dz = -0.5 * root * sind
        dphi = 0.5 * math.sqrt((1.0 - z * z) / (2.0 * big_i)) * cosd
        dtheta = -0.5 * z * math.sqrt(2.0 * big_i / (1.0 - z * z)) * cosd + 2.0 * g * z
        alpha = big_i * dphi + z * dtheta
        return OrbitState((di, dz), (dphi, dtheta), alpha)

    i1, i2, i3, i4 = acts
    if min(i1, i2, i3, i4) < _CHART_FLOOR:
        raise ModelError("chart boundary: action coordinate below 1e-12")
    p1, p2, p3, p4 = angs
    if kind == "FlapTwoEE":
        t = system.param("t")
        psi = -p1 - p2 + p3 - p4
        amp = 4.0 * math.sqrt(i1 * i2 * i3 * i4)
        x = amp * math.cos(psi)
        y = amp * math.sin(psi)
        cx = 0.15 * t  # (t/3)(9/20)
        jj = i2 + i3
        r = i3 - i4
        dp1 = cx * x / (2.0 * i1)
        dp2 = cx * x / (2.0 * i2) + (2.0 * t / 3.0) * (r + 2.0)
        dp3 = (1.0 - t) + cx * x / (2.0 * i3) + (t / 3.0) * (2.0 * (r + 2.0) + (2.0 * jj - 3.0)) + 8.0 * t * i4
        dp4 = -(1.0 - t) + cx * x / (2.0 * i4) - (t / 3.0) * (2.0 * jj - 3.0) + 8.0 * t * i3
        di1 = -cx * y
        di2 = -cx * y
        di3 = cx * y
        di4 = -cx * y
    elif kind == "FamilyABC":
        a, b, c = (system.param(k) for k in "abc")
        psi = p1 + p2 - p3 + p4
        amp = 4.0 * math.sqrt(i1 * i2 * i3 * i4)
        x = amp * math.cos(psi)
        y = amp * math.sin(psi)
        s2 = 1.0 / math.sqrt(2.0)
        dp1 = s2 * x / (2.0 * i1)
        dp2 = s2 * x / (2.0 * i2)
        dp3 = s2 * x / (2.0 * i3) + a + 2.0 * b * i3 + 3.0 * c * i3 * i3
        dp4 = s2 * x / (2.0 * i4)
        di1 = s2 * y
        di2 = s2 * y
        di3 = -s2 * y
        di4 = s2 * y
    elif kind in ("CurledTori", "CurledToriFlap"):
        w = 1.0 if kind == "CurledTori" else 0.25
        psi = -2.0 * p1 + p3 - p4
        amp = 4.0 * i1 * math.sqrt(i3 * i4)
        x = amp * math.cos(psi)
        y = amp * math.sin(psi)
        dp1 = w * 4.0 * math.sqrt(i3 * i4) * math.cos(psi)
        dp2 = 0.0
        dp3 = w * x / (2.0 * i3)
        dp4 = w * x / (2.0 * i4)
        if kind == "CurledToriFlap":
            dp3 += 0.75
        di1 = -w * 2.0 * y
        di2 = 0.0
        di3 = w * y
        di4 = -w * y
    elif kind == "Pleat":
        t = system.param("t")
        psi = -p1 + p3 - p4
        amp = 2.0 * math.sqrt(2.0 * i1 * i3 * i4)
        x = amp * math.cos(psi)
        y = amp * math.sin(psi)
        dp1 = t * x / (2.0 * i1) + 8.0 * t * i3
        dp2 = 0.0
        dp3 = (1.0 - 2.0 * t) + t * x / (2.0 * i3) + 8.0 * t * i1
        dp4 = t * x / (2.0 * i4)
        di1 = -t * y
        di2 = 0.0
        di3 = t * y
        di4 = -t * y
    else:
        raise ModelError(kind)
    alpha = i1 * dp1 + i2 * dp2 + i3 * dp3 + i4 * dp4
    return OrbitState((di1, di2, di3, di4), (dp1, dp2, dp3, dp4), alpha)


def actions_from_root(system: SystemSpec, j: float, root: float) -> tuple[float, ...]:
    """Action coordinates on the section, reconstructed from the reduced
    variable by the per-system linear relations."""
    kind = system.kind
    if kind == "JCModified":
        return (j - root, root)
    if kind == "FlapTwoEE":
        return (3.0 - j - (1.0 + root) / 2.0, j - (1.0 + root) / 2.0,
                (1.0 + root) / 2.0, (1.0 - root) / 2.0)
    if kind == "FamilyABC":
        return (3.0 - j - root, j - root, root, 1.0 - root)
    if kind in ("CurledTori", "CurledToriFlap"):
        return (3.0 - j - 2.0 * root, j, root, 1.0 - root)
    if kind == "Pleat":
        n1, _ = levels(system)
        # pi variables are |z_k|^2 = 2 I_k
        pi3 = root
        pi1 = 2.0 * n1 - 2.0 * j - pi3
        pi4 = 2.0 - pi3
        return (pi1 / 2.0, j, pi3 / 2.0, pi4 / 2.0)
    raise ModelError(kind)


def section_sign(system: SystemSpec, j: float, h: float, root: float) -> float:
    """Sign of the section invariant (S for JC, X otherwise) at the root."""
    kind = system.kind
    if kind == "JCModified":
        g = system.param("gamma")
        return 2.0 * (h - g * root * root)
    if kind == "FlapTwoEE":
        t = system.param("t")
        return (20.0 / (9.0 * t)) * (
            3.0 * h - 4.0 * j * t + 6.0 * t * root * root
            + root * (-3.0 + 6.0 * t - 2.0 * j * t)
        )
    if kind == "FamilyABC":
        a, b, c = (system.param(k) for k in "abc")
        return math.sqrt(2.0) * (h - a * root - b * root ** 2 - c * root ** 3)
    if kind == "CurledTori":
        return h
    if kind == "CurledToriFlap":
        return 4.0 * h - 3.0 * root
    if kind == "Pleat":
        t = system.param("t")
        n1, _ = levels(system)
        pi3 = root
        pi1 = 2.0 * n1 - 2.0 * j - pi3
        return (h - (1.0 - 2.0 * t) * pi3 / 2.0 - 2.0 * t * pi1 * pi3) / t
    raise ModelError(kind)


def refine_root_on_branch(system: SystemSpec, j: float, h: float, root: float) -> float:
    """Refine a section root against the branch function h_sign(r) = h.

    At a quartic root the section is tangent to the energy level, so a root
    error delta costs sqrt(delta) in energy; solving the branch equation
    directly restores machine-precision energy at the start point.
    """
    sign = 1 if section_sign(system, j, h, root) >= 0 else -1

    def g(r):
        return float(_section_branch_h(system, j, np.array([r]), sign)[0]) - h

    r = root
    lo, hi = _admissible_r_interval(system, j)
    span = max(hi - lo, 1e-12)
    step = 1e-7 * span
    for _ in range(60):
        g0 = g(r)
        d = (g(r + step) - g(r - step)) / (2.0 * step)
        if d == 0.0:
            break
        r_new = r - g0 / d
        if not (lo - 1e-9 <= r_new <= hi + 1e-9):
            break
        if abs(r_new - r) < 1e-16 * max(1.0, abs(r)):
            r = r_new
            break
        r = r_new
    return min(max(r, lo), hi)


def initial_condition(
    system: SystemSpec, j: float, h: float, root: float, component: RegionTag
) -> OrbitState:
    """Section start state at the given admissible root.

    Angles are zero except for the single angle set to pi when the section
    invariant is negative there.
    """
    acts = actions_from_root(system, j, root)
    # entries of the form |z_k|^2/2 must be non-negative; the JC sphere
    # height (second entry) is allowed any sign
    check = acts[:1] if system.kind == "JCModified" else acts
    if min(check) < -1e-9:
        raise ModelError(f"root {root} gives negative action coordinates")
    if system.kind == "JCModified":
        acts = (max(acts[0], 0.0), acts[1])
    else:
        acts = tuple(max(v, 0.0) for v in acts)
    sgn = section_sign(system, j, h, root)
    if system.kind == "JCModified":
        angles = (math.pi, 0.0) if sgn < 0 else (0.0, 0.0)
    else:
        angles = (0.0, 0.0, math.pi, 0.0) if sgn < 0 else (0.0, 0.0, 0.0, 0.0)
    return OrbitState(acts, angles, 0.0)


# ---------------------------------------------------------------------------
# bifurcation sets


def _section_branch_h(system: SystemSpec, j: float, r: np.ndarray, sign: int) -> np.ndarray:
    """h along the section branch of given sign, as a function of the
    reduced variable (the envelope parametrization of the critical set)."""
    kind = system.kind
    if kind == "JCModified":
        g = system.param("gamma")
        q = 2.0 * (j - r) * (1.0 - r * r)
        return g * r * r + 0.5 * sign * np.sqrt(np.maximum(q, 0.0))
    if kind == "FlapTwoEE":
        t = system.param("t")
        q = (-1.0 + 2.0 * j - r) * (-1.0 + r) * (1.0 + r) * (-5.0 + 2.0 * j + r)
        x = sign * np.sqrt(np.maximum(q, 0.0))
        return (4.0 * j * t - 6.0 * t * r * r - r * (-3.0 + 6.0 * t - 2.0 * j * t)
                + (9.0 * t / 20.0) * x) / 3.0
    if kind == "FamilyABC":
        a, b, c = (system.param(k) for k in "abc")
        q = 16.0 * (3.0 - j - r) * (j - r) * r * (1.0 - r)
        x = sign * np.sqrt(np.maximum(q, 0.0))
        return a * r + b * r ** 2 + c * r ** 3 + x / math.sqrt(2.0)
    if kind == "CurledTori":
        return sign * 4.0 * (3.0 - j - 2.0 * r) * np.sqrt(np.maximum(r * (1.0 - r), 0.0))
    if kind == "CurledToriFlap":
        x = sign * 4.0 * (3.0 - j - 2.0 * r) * np.sqrt(np.maximum(r * (1.0 - r), 0.0))
        return 0.75 * r + 0.25 * x
    if kind == "Pleat":
        t = system.param("t")
        n1, _ = levels(system)
        c0 = 2.0 * n1 - 2.0 * j
        q = (c0 - r) * r * (2.0 - r)
        x = sign * np.sqrt(np.maximum(q, 0.0))
        return (1.0 - 2.0 * t) * r / 2.0 + 2.0 * t * (c0 - r) * r + t * x
    raise ModelError(kind)


def _admissible_r_interval(system: SystemSpec, j: float) -> tuple[float, float]:
    kind = system.kind
    if kind == "JCModified":
        return (-1.0, min(j, 1.0))
    if kind == "FlapTwoEE":
        return (-1.0, min(1.0, 2.0 * j - 1.0, 5.0 - 2.0 * j))
    if kind == "FamilyABC":
        return (0.0, min(1.0, j, 3.0 - j))
    if kind in ("CurledTori", "CurledToriFlap"):
        return (0.0, min(1.0, (3.0 - j) / 2.0))
    if kind == "Pleat":
        n1, _ = levels(system)
        return (0.0, min(2.0, 2.0 * n1 - 2.0 * j))
    raise ModelError(kind)


def _classify_fold(system: SystemSpec, j: float, h: float) -> str:
    """Hyperbolic fold (pair appears inside the root span) vs elliptic fold
    (a component is born/dies at the edge of the span)."""
    counts = {}
    spans = {}
    for s, dh in (("-", -1e-7), ("+", 1e-7)):
        try:
            curve = reduced_curve(system, j, h + dh)
            roots, _ = admissible_roots(curve)
        except Exception:
            roots = np.empty(0)
        counts[s] = len(roots)
        spans[s] = (roots.min(), roots.max()) if len(roots) else None
    if counts["+"] == counts["-"]:
        return "fold"
    rich, poor = ("+", "-") if counts["+"] > counts["-"] else ("-", "+")
    if spans[poor] is None:
        return "fold-elliptic"
    lo, hi = spans[poor]
    rich_curve = reduced_curve(system, j, h + (1e-7 if rich == "+" else -1e-7))
    rich_roots, _ = admissible_roots(rich_curve)
    new = [r for r in rich_roots if lo + 1e-9 < r < hi - 1e-9]
    return "fold-hyperbolic" if len(new) >= 2 else "fold-elliptic"


def bifurcation_set(
    system: SystemSpec,
    j_samples: int,
    j_window: tuple[float, float] | None = None,
    r_samples: int = 600,
) -> list[tuple[float, float, str]]:
    """Critical values sampled along vertical lines: for each j, the h where
    the reduced curve has a double root in the admissible interval (folds,
    classified) or a root at an interval endpoint (boundary)."""
    if j_samples < 2:
        raise ModelError("j_samples must be >= 2")
    if system.kind == "HirzebruchToric":
        return _hirzebruch_boundary(system, j_samples)
    lo_j, hi_j = j_range(system)
    if j_window is not None:
        lo_j, hi_j = max(lo_j, j_window[0]), min(hi_j, j_window[1])
    elif not math.isfinite(hi_j):
        hi_j = 2.5
    out: list[tuple[float, float, str]] = []
    for j in np.linspace(lo_j + 1e-9, hi_j - 1e-9, j_samples):
        for h, kind in critical_ordinates(system, float(j), r_samples):
            out.append((float(j), h, kind))
    return out


def _hirzebruch_boundary(system: SystemSpec, j_samples: int) -> list[tuple[float, float, str]]:
    a = system.param("alpha")
    b = system.param("beta")
    n = system.param("n")
    out = []
    for j in np.linspace(0.0, a + n * b, j_samples):
        top = b if j <= a or n == 0 else b - (j - a) / n
        out.append((float(j), 0.0, "boundary"))
        out.append((float(j), float(top), "boundary"))
    return out


def axis_barrier_curves(system: SystemSpec, j: float) -> dict[str, float]:
    """Ordinates, keyed by the grazed coordinate axis, where the fiber over
    (j, h) meets an axis whose angle enters the action bookkeeping.

    Crossing these curves the raw second action switches branch (the
    unwrapped angle of the grazed coordinate swings by pi), so they are the
    gluing interfaces of the continuation.
    """
    kind = system.kind
    out: dict[str, float] = {}
    if kind == "JCModified":
        # both sphere poles lie on the level h = gamma
        out["poles"] = system.param("gamma")
        return out
    if kind == "FlapTwoEE":
        t = system.param("t")
        if 1.0 <= j <= 2.0:  # z4 = 0 at R = 1
            out["z4"] = (1.0 - t) + t * (2.0 * j - 3.0)
        if j <= 1.0:  # z2 = 0 at R = 2j - 1
            r = 2.0 * j - 1.0
            out["z2"] = ((1.0 - t) * r + (t / 3.0) * (2.0 * j - 3.0) * (r + 2.0)
                         + 2.0 * t * (1.0 - r * r))
        if j >= 2.0:  # z1 = 0 at R = 5 - 2j
            r = 5.0 - 2.0 * j
            out["z1"] = ((1.0 - t) * r + (t / 3.0) * (2.0 * j - 3.0) * (r + 2.0)
                         + 2.0 * t * (1.0 - r * r))
        return out
    if kind == "CurledTori":
        out["line"] = 0.0
        return out
    if kind == "CurledToriFlap":
        if j >= 1.0:
            out["z1"] = 0.75 * (3.0 - j) / 2.0
        if j <= 1.0:
            out["z4"] = 0.75
        return out
    if kind == "FamilyABC":
        a, b, c = (system.param(k) for k in "abc")
        if 1.0 <= j <= 2.0:
            out["z4"] = a + b + c
        if j <= 1.0:
            out["z2"] = a * j + b * j * j + c * j ** 3
        if j >= 2.0:
            r = 3.0 - j
            out["z1"] = a * r + b * r * r + c * r ** 3
        return out
    if kind == "Pleat":
        t = system.param("t")
        n1, _ = levels(system)
        c0 = 2.0 * n1 - 2.0 * j
        out["z3"] = 0.0
        if c0 <= 2.0:
            out["z1"] = (1.0 - 2.0 * t) * c0 / 2.0
        return out
    return out


def critical_ordinates(system: SystemSpec, x: float, r_samples: int = 4000) -> list[tuple[float, str]]:
    """All critical h over the single abscissa x, with their kinds."""
    r_lo, r_hi = _admissible_r_interval(system, x)
    if r_hi <= r_lo:
        return []
    pad = 1e-9 * max(1.0, r_hi - r_lo)
    rr = np.linspace(r_lo + pad, r_hi - pad, r_samples)
    out: list[tuple[float, str]] = []
    for sign in (+1, -1):
        hh = _section_branch_h(system, x, rr, sign)
        out.append((float(hh[0]), "boundary"))
        out.append((float(hh[-1]), "boundary"))
        d = np.diff(hh)
        for i in range(len(d) - 1):
            if d[i] == 0.0 or (d[i] > 0) == (d[i + 1] > 0):
                continue
            a, b = rr[i], rr[i + 2]
            for _ in range(80):
                m = 0.5 * (a + b)
                dm = (_section_branch_h(system, x, np.array([m + 1e-9]), sign)[0]
                      - _section_branch_h(system, x, np.array([m - 1e-9]), sign)[0])
                da = (_section_branch_h(system, x, np.array([a + 1e-9]), sign)[0]
                      - _section_branch_h(system, x, np.array([a - 1e-9]), sign)[0])
                if (dm > 0) == (da > 0):
                    a = m
                else:
                    b = m
                if b - a < 1e-13:
                    break
            r_star = 0.5 * (a + b)
            h_star = float(_section_branch_h(system, x, np.array([r_star]), sign)[0])
            out.append((h_star, _classify_fold(system, x, h_star)))
    return out


def hyperbolic_ordinate(system: SystemSpec, x: float) -> float:
    """Ordinate of the hyperbolic-regular curve over abscissa x (the cut
    anchor height for flap systems)."""
    if system.kind == "CurledTori":
        return 0.0
    cands = [h for h, kind in critical_ordinates(system, x) if kind == "fold-hyperbolic"]
    if not cands:
        raise ModelError(f"no hyperbolic-regular value over x={x}")
    return cands[0] if len(cands) == 1 else float(np.median(cands))
