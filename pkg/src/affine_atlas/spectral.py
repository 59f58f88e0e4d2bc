"""Quantization: monomial bases of the J-hat eigenspaces, symmetric
tridiagonal matrices of the second operator restricted to each eigenspace,
and joint spectra.

Planck constants are snapped to exact rationals (denominator <= 1e6) and the
Diophantine level constraints are checked in exact arithmetic before any
enumeration, so dimension formulas hold as integer identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .models import ModelError, SystemSpec, levels


class ConfigurationError(ValueError):
    """An inadmissible Planck constant or malformed run configuration."""


@dataclass(frozen=True)
class BasisElement:
    multi_index: tuple[int, ...]
    j_eigenvalue: float


@dataclass(frozen=True)
class TridiagonalOperator:
    diag: tuple[float, ...]
    offdiag: tuple[float, ...]

    def __post_init__(self):
        if len(self.diag) < 1:
            raise ValueError("empty operator")
        if len(self.offdiag) != len(self.diag) - 1:
            raise ValueError("offdiag must have length len(diag)-1")


@dataclass(frozen=True)
class JointSpectrumPoint:
    j: float
    h: float
    index: int


def snap_hbar(hbar) -> Fraction:
    """Interpret a float or 'p/q' string as the nearest exact rational with
    denominator at most 1e6."""
    if isinstance(hbar, Fraction):
        frac = hbar
    elif isinstance(hbar, str):
        frac = Fraction(hbar)
    else:
        frac = Fraction(hbar).limit_denominator(10**6)
    if frac <= 0:
        raise ConfigurationError("hbar must be positive")
    return frac


def _as_natural(value: Fraction, constraint: str) -> int:
    if value.denominator != 1 or value < 0:
        raise ConfigurationError(
            f"inadmissible hbar: {constraint} = {value} is not a natural number"
        )
    return int(value)


def _level_integers(system: SystemSpec, hbar: Fraction) -> tuple[int, int]:
    """Exact solutions (M1, M2) of the reduction-level constraints."""
    kind = system.kind
    if kind == "JCModified":
        n = _as_natural(2 / hbar - 1, "2/hbar - 1")
        return (n, 0)
    if kind == "HirzebruchToric":
        alpha = Fraction(system.param("alpha")).limit_denominator(10**6)
        beta = Fraction(system.param("beta")).limit_denominator(10**6)
        n = int(system.param("n"))
        # only the fiber-level constraint is an integrality requirement;
        # the base level enters through the eigenvalue cap below
        n2 = _as_natural(beta / hbar - 1, "beta/hbar - 1")
        cap = (alpha + n * beta) / hbar - 1 - Fraction(n, 2)
        if cap < 0:
            raise ConfigurationError(
                "inadmissible hbar: (alpha+n*beta)/hbar - 1 - n/2 is negative"
            )
        return (int(cap), n2)
    if kind == "Pleat":
        m1 = _as_natural(Fraction(101, 50) / hbar - Fraction(3, 2), "2.02/hbar - 3/2")
        m2 = _as_natural(1 / hbar - 1, "1/hbar - 1")
        return (m1, m2)
    if kind in ("FlapTwoEE", "CurledTori", "CurledToriFlap", "FamilyABC"):
        m1 = _as_natural(3 / hbar - 2, "3/hbar - 2")
        m2 = _as_natural(1 / hbar - 1, "1/hbar - 1")
        return (m1, m2)
    raise ModelError(kind)


def enumerate_basis(
    system: SystemSpec, hbar, j_max: float | None = None
) -> dict[float, list[BasisElement]]:
    """Ordered monomial basis of each J-hat eigenspace, keyed by eigenvalue.

    ``j_max`` truncates the (infinite) ladder of the Jaynes-Cummings model;
    compact systems enumerate everything.
    """
    hb = snap_hbar(hbar)
    kind = system.kind
    out: dict[float, list[BasisElement]] = {}
    if kind == "JCModified":
        n, _ = _level_integers(system, hb)
        cap = 2.5 if j_max is None else j_max
        m = 0
        while True:
            lam = hb * (Fraction(1 - n, 2) + m)
            if float(lam) > cap:
                break
            l0 = m  # lam/hbar + (n-1)/2
            kmax = min(n, l0)
            elems = [
                BasisElement((l0 - k, k), float(lam)) for k in range(kmax + 1)
            ]
            out[float(lam)] = elems
            m += 1
        return out
    if kind == "HirzebruchToric":
        a2_cap, n2 = _level_integers(system, hb)
        n = int(system.param("n"))
        alpha = Fraction(system.param("alpha")).limit_denominator(10**6)
        # alpha1 = (alpha - a2)/hbar + (n-1)/2 + n*alpha4 >= 0, per the
        # eigenspace-dimension lemma; alpha3 = n2 - alpha4
        for a2 in range(a2_cap + 1):
            jval = hb * (a2 + Fraction(1, 2))
            elems = []
            for a4 in range(n2, -1, -1):
                a1 = (alpha - jval) / hb + Fraction(n - 1, 2) + n * a4
                if a1 < 0:
                    continue
                elems.append(
                    BasisElement((int(a1), a2, n2 - a4, a4), float(jval))
                )
            if elems:
                out[float(jval)] = elems
        return out
    m1, m2 = _level_integers(system, hb)
    if kind in ("FlapTwoEE", "FamilyABC"):
        # J-hat eigenvalue hbar(alpha2 + alpha3 + 1)
        for a_tot in range(m1 + 1):
            kmax = min(a_tot, m2, m1 - a_tot)
            if kmax < 0:
                continue
            jval = float(hb * (a_tot + 1))
            out[jval] = [
                BasisElement((m1 - a_tot - k, a_tot - k, k, m2 - k), jval)
                for k in range(kmax + 1)
            ]
        return out
    if kind in ("CurledTori", "CurledToriFlap", "Pleat"):
        # J-hat eigenvalue hbar(alpha2 + 1/2)
        weight = 2 if kind != "Pleat" else 1
        for a2 in range(m1 + 1):
            kmax = min(m2, (m1 - a2) // weight)
            if kmax < 0:
                continue
            jval = float(hb * (a2 + Fraction(1, 2)))
            out[jval] = [
                BasisElement((m1 - a2 - weight * k, a2, k, m2 - k), jval)
                for k in range(kmax + 1)
            ]
        return out
    raise ModelError(kind)


def eigenspace_dimension(system: SystemSpec, hbar, j) -> int:
    basis = enumerate_basis(system, hbar, j_max=float(j) + 1.0)
    key = min(basis, key=lambda v: abs(v - float(j)), default=None)
    if key is None or abs(key - float(j)) > 1e-9:
        raise ConfigurationError(f"{j} is not a J-hat eigenvalue")
    return len(basis[key])


def build_operator(system: SystemSpec, hbar, j: float) -> TridiagonalOperator:
    """Matrix of the second quantized Hamiltonian on the eigenspace of j."""
    hb = snap_hbar(hbar)
    hbf = float(hb)
    kind = system.kind
    basis = enumerate_basis(system, hbar, j_max=float(j) + 1.0)
    key = min(basis, key=lambda v: abs(v - float(j)), default=None)
    if key is None or abs(key - float(j)) > 1e-9 * max(1.0, abs(float(j))):
        raise ModelError(f"{j} is not in spec(J-hat)")
    elems = basis[key]
    dim = len(elems)
    if kind == "JCModified":
        g = system.param("gamma")
        n, _ = _level_integers(system, hb)
        l0 = elems[0].multi_index[0]  # k=0 element has l = l0
        diag = [g * (hbf * (n - 2 * k)) ** 2 / 4.0 for k in range(dim)]
        off = [
            (hbf / 2.0) ** 1.5 * math.sqrt((l0 + 1 - k) * k * (n - k + 1))
            for k in range(1, dim)
        ]
        return TridiagonalOperator(tuple(diag), tuple(off))
    if kind == "HirzebruchToric":
        diag = [hbf * (e.multi_index[2] + 0.5) for e in elems]
        return TridiagonalOperator(tuple(diag), tuple([0.0] * (dim - 1)))
    if kind == "FlapTwoEE":
        t = system.param("t")
        a = float(key)
        diag, off = [], []
        for idx, e in enumerate(elems):
            a1, a2, k, a4 = e.multi_index
            r_eig = hbf * (k - a4)
            diag.append(
                (1.0 - t) * r_eig
                + (t / 3.0) * (2.0 * a - 3.0) * (r_eig + 2.0)
                + 8.0 * t * hbf * hbf * (k + 0.5) * (a4 + 0.5)
            )
            if idx > 0:
                off.append(
                    (3.0 * t / 10.0) * hbf * hbf
                    * math.sqrt((a1 + 1) * (a2 + 1) * (a4 + 1) * k)
                )
        return TridiagonalOperator(tuple(diag), tuple(off))
    if kind == "FamilyABC":
        a_, b_, c_ = (system.param(kk) for kk in "abc")
        diag, off = [], []
        for idx, e in enumerate(elems):
            a1, a2, k, a4 = e.multi_index
            rho = hbf * (k + 0.5)
            diag.append(a_ * rho + b_ * rho**2 + c_ * rho**3)
            if idx > 0:
                off.append(
                    math.sqrt(2.0) * hbf * hbf
                    * math.sqrt((a1 + 1) * (a2 + 1) * (a4 + 1) * k)
                )
        return TridiagonalOperator(tuple(diag), tuple(off))
    if kind == "Pleat":
        t = system.param("t")
        diag, off = [], []
        for idx, e in enumerate(elems):
            a1, a2, k, a4 = e.multi_index
            diag.append(
                hbf * (k + 0.5) * (1.0 - 2.0 * t + 4.0 * hbf * t)
                + 8.0 * t * hbf * hbf * a1 * (k + 0.5)
            )
            if idx > 0:
                off.append(
                    math.sqrt(2.0) * t * hbf**1.5
                    * math.sqrt((a1 + 1) * (a4 + 1) * k)
                )
        return TridiagonalOperator(tuple(diag), tuple(off))
    if kind in ("CurledTori", "CurledToriFlap"):
        w = 1.0 if kind == "CurledTori" else 0.25
        diag, off = [], []
        for idx, e in enumerate(elems):
            a1, a2, k, a4 = e.multi_index
            diag.append(0.0 if kind == "CurledTori" else 0.75 * hbf * (k + 0.5))
            if idx > 0:
                off.append(
                    w * 2.0 * hbf * hbf
                    * math.sqrt(k * (a4 + 1) * (a1 + 1) * (a1 + 2))
                )
        return TridiagonalOperator(tuple(diag), tuple(off))
    raise ModelError(kind)


# ---------------------------------------------------------------------------
# symmetric tridiagonal eigenvalues: implicit-shift QL, Sturm bisection oracle


def ql_eigenvalues(op: TridiagonalOperator, max_sweeps: int = 64) -> np.ndarray:
    """All eigenvalues by the implicit-shift QL iteration, ascending."""
    d = np.array(op.diag, dtype=float)
    n = d.size
    e = np.zeros(n)
    e[: n - 1] = op.offdiag
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise RuntimeError("QL iteration failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            else:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
    d.sort()
    return d


def _sturm_count(d: np.ndarray, e2: np.ndarray, x: float) -> int:
    """Number of eigenvalues strictly below x (Sturm sequence count)."""
    count = 0
    q = 1.0
    tiny = 1e-300
    for i in range(d.size):
        q = d[i] - x - (e2[i - 1] / q if i > 0 else 0.0)
        if q == 0.0:
            q = tiny
        if q < 0.0:
            count += 1
    return count


def bisection_eigenvalues(op: TridiagonalOperator, tol: float = 1e-13) -> np.ndarray:
    """Independent oracle: every eigenvalue by Sturm-count bisection."""
    d = np.array(op.diag, dtype=float)
    e = np.array(op.offdiag, dtype=float)
    n = d.size
    e2 = e * e
    pad = np.zeros(n)
    pad[: n - 1] = np.abs(e)
    radius = np.abs(d) + np.concatenate(([0.0], np.abs(e))) + pad
    lo0 = float(np.min(d - radius)) - 1.0
    hi0 = float(np.max(d + radius)) + 1.0
    scale = max(abs(lo0), abs(hi0), 1.0)
    out = np.empty(n)
    for idx in range(n):
        lo, hi = lo0, hi0
        while hi - lo > tol * scale:
            mid = 0.5 * (lo + hi)
            if _sturm_count(d, e2, mid) <= idx:
                lo = mid
            else:
                hi = mid
        out[idx] = 0.5 * (lo + hi)
    return out


def eigenvalues(op: TridiagonalOperator) -> np.ndarray:
    """Eigenvalues, ascending. QL with a bisection fallback."""
    try:
        return ql_eigenvalues(op)
    except RuntimeError:
        return bisection_eigenvalues(op)


def joint_spectrum(
    system: SystemSpec, hbar, j_max: float | None = None
) -> list[JointSpectrumPoint]:
    """Concatenated (j, h) eigenvalue pairs over every J-hat eigenspace."""
    basis = enumerate_basis(system, hbar, j_max=j_max)
    points: list[JointSpectrumPoint] = []
    for jval in sorted(basis):
        op = build_operator(system, hbar, jval)
        for idx, h in enumerate(eigenvalues(op)):
            points.append(JointSpectrumPoint(jval, float(h), idx))
    return points
