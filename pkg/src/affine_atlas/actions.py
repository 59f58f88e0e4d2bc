"""Classical actions: first-return integration of the reduced orbit with
event detection, rotation data, the closing-loop second action, and the
quadrature route for the swallowtail system.

The second action is the loop integral (1/2pi) oint alpha over the cycle
obtained by flowing the Hamiltonian until the reduced orbit closes and then
flowing the auxiliary circle actions backwards by the reached angles. The
closing contribution is -N1*phi1 - N2*phi4 - j*(phi2-phi1) on the reduced
C^4 systems (with theta2 = phi3 - phi1 replacing phi4 on the swallowtail,
matching its quadrature normal form) and -j*theta on R^2 x S^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .models import (
    ModelError,
    OrbitState,
    RegionTag,
    SystemSpec,
    component_interval,
    initial_condition,
    levels,
    reduced_curve,
    refine_root_on_branch,
    region_classify,
)

_SYS_IDS = {
    "JCModified": K.SYS_JC,
    "FlapTwoEE": K.SYS_FLAP2EE,
    "Pleat": K.SYS_PLEAT,
    "CurledTori": K.SYS_CURLED,
    "CurledToriFlap": K.SYS_CURLED_FLAP,
    "FamilyABC": K.SYS_FAMILY_ABC,
}


class ReturnError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReturnData:
    tau: float
    end_angles: tuple[float, ...]
    alpha_integral: float
    rotation: float
    start_angles: tuple[float, ...] = ()

    @property
    def angle_advances(self) -> tuple[float, ...]:
        if not self.start_angles:
            return self.end_angles
        return tuple(e - s for e, s in zip(self.end_angles, self.start_angles))


@dataclass(frozen=True)
class ActionPoint:
    j: float
    K: float
    region: RegionTag
    branch_meta: dict


def _params(system: SystemSpec) -> np.ndarray:
    kind = system.kind
    if kind == "JCModified":
        return np.array([system.param("gamma"), 0.0, 0.0])
    if kind in ("FlapTwoEE", "Pleat"):
        return np.array([system.param("t"), 0.0, 0.0])
    if kind == "FamilyABC":
        return np.array([system.param("a"), system.param("b"), system.param("c")])
    return np.array([0.0, 0.0, 0.0])


def _cossin(angle: float) -> tuple[float, float]:
    # exact values on the section angles so the start sits exactly on Y = 0
    if angle == 0.0:
        return 1.0, 0.0
    if angle == math.pi:
        return -1.0, 0.0
    return math.cos(angle), math.sin(angle)


def _cartesian(system: SystemSpec, state: OrbitState) -> np.ndarray:
    if system.kind == "JCModified":
        big_i, z = state.actions
        phi, theta = state.angles
        ru = math.sqrt(max(2.0 * big_i, 0.0))
        rx = math.sqrt(max(1.0 - z * z, 0.0))
        cp, sp = _cossin(phi)
        ct, st = _cossin(theta)
        return np.array([
            ru * cp, ru * sp, rx * ct, rx * st,
            z, phi, theta, state.alpha_accum,
        ])
    y = np.empty(13)
    for k in range(4):
        r = math.sqrt(max(2.0 * state.actions[k], 0.0))
        ca, sa = _cossin(state.angles[k])
        y[k] = r * ca
        y[4 + k] = r * sa
        y[8 + k] = state.angles[k]
    y[12] = state.alpha_accum
    return y


def section_start(
    system: SystemSpec, j: float, h: float, component: RegionTag
) -> OrbitState:
    """Section state on the component's reduced orbit where the section
    invariant is increasing (both root-pair endpoints are tried)."""
    sys_id = _SYS_IDS[system.kind]
    params = _params(system)
    pair = component_interval(system, j, h, component)
    best = None
    for root in pair:
        root = refine_root_on_branch(system, j, h, root)
        state = initial_condition(system, j, h, root, component)
        y0 = _cartesian(system, state)
        rate = K.event_rate(sys_id, params, y0)
        if rate > 0.0:
            return state
        if best is None or rate > best[0]:
            best = (rate, root)
    raise ReturnError(
        f"section rate not positive at either root of ({j}, {h}); best {best}"
    )


def first_return(
    system: SystemSpec,
    j: float,
    h: float,
    component: RegionTag | None = None,
    rtol: float = 1e-11,
    atol: float = 1e-11,
    t_max: float = 1e4,
) -> ReturnData:
    """Integrate from the section until the reduced orbit closes (the
    section invariant crosses zero upward, skipping the trivial root at
    t=0 via tau_min = 1e-6)."""
    if component is None:
        component = region_classify(system, j, h)
    sys_id = _SYS_IDS[system.kind]
    params = _params(system)
    state = section_start(system, j, h, component)
    y0 = _cartesian(system, state)
    status, tau, y_end = K.integrate_to_event(
        sys_id, params, y0, rtol, atol, t_max, 1e-6
    )
    if status == 1:
        raise ReturnError(f"no return within t_max={t_max} at ({j}, {h})")
    if status == 2:
        raise ReturnError(f"step-size underflow at ({j}, {h}), t={tau}")
    if system.kind == "JCModified":
        phi, theta = y_end[5], y_end[6]
        return ReturnData(tau, (phi, theta), y_end[7], theta, state.angles)
    angles = tuple(y_end[8:12])
    return ReturnData(
        tau, angles, y_end[12], angles[1] - angles[0], state.angles
    )


def closing_terms(system: SystemSpec, j: float, data: ReturnData) -> float:
    """The cycle-closing contribution to oint alpha.

    Closing flows run backwards by the angle ADVANCES (end minus start;
    the section start may put one angle at pi)."""
    if system.kind == "JCModified":
        return -j * data.rotation
    n1, n2 = levels(system)
    p1, p2, p3, p4 = data.angle_advances
    if system.kind == "Pleat":
        return -n1 * p1 - n2 * (p3 - p1) - j * (p2 - p1)
    return -n1 * p1 - n2 * p4 - j * (p2 - p1)


def second_action(
    system: SystemSpec,
    j: float,
    h: float,
    component: RegionTag | None = None,
    rtol: float = 1e-11,
    atol: float = 1e-11,
) -> ActionPoint:
    if component is None:
        component = region_classify(system, j, h)
    data = first_return(system, j, h, component, rtol=rtol, atol=atol)
    k_val = (data.alpha_integral + closing_terms(system, j, data)) / (2.0 * math.pi)
    meta = {
        "component": component.label,
        "tau": data.tau,
        "rotation": data.rotation,
    }
    return ActionPoint(j, k_val, component, meta)


# ---------------------------------------------------------------------------
# swallowtail quadrature (independent of the ODE path)

_LEGGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_LEGGAUSS_MAX = 8192


def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _LEGGAUSS_CACHE[n]


def _pleat_pieces(j: float, h: float, t: float, n1: float):
    c0 = 2.0 * n1 - 2.0 * j

    def s_val(p3):
        pi1 = c0 - p3
        inner = h - (1.0 - 2.0 * t) * p3 / 2.0 - 2.0 * t * pi1 * p3
        return pi1 * p3 * (2.0 - p3) - (inner / t) ** 2

    def pi5(p3):
        pi1 = c0 - p3
        return (h - (1.0 - 2.0 * t) * p3 / 2.0 - 2.0 * t * pi1 * p3) / t

    return c0, s_val, pi5


def quadrature_actions_pleat(
    j: float,
    h: float,
    component: RegionTag | None = None,
    t: float = 1.0,
    n_start: int = 64,
    rel_tol: float = 1e-9,
) -> dict:
    """First-return time and action data of the swallowtail system by
    Gauss-Legendre quadrature between consecutive admissible roots.

    The endpoint inverse-square-root singularities are removed by the
    substitution pi3 = a + (b-a) sin^2(s). Node counts double until T is
    stable to ``rel_tol``. Returns T, theta_J, theta_N2 and the second
    action K assembled with theta_N1 = -theta_J.
    """
    system = SystemSpec.pleat(t)
    if component is None:
        component = region_classify(system, j, h)
    a, b = component_interval(system, j, h, component)
    if not (b > a):
        raise ModelError(f"degenerate root pair at ({j}, {h})")
    # the period integral is sqrt-sensitive to endpoint accuracy: refine the
    # turning points on the section-branch equation, then deflate the
    # quartic by them so the quotient is evaluated without cancellation
    a = refine_root_on_branch(system, j, h, a)
    b = refine_root_on_branch(system, j, h, b)
    n1, n2 = levels(system)
    c0, s_val, pi5 = _pleat_pieces(j, h, t, n1)
    quartic = np.array(reduced_curve(system, j, h).coeffs[::-1])
    quot = quartic
    for root in (a, b):
        quot, _ = np.polydiv(quot, np.array([1.0, -root]))

    def eval_n(n):
        s_nodes, s_weights = _leggauss(n)
        s = 0.25 * math.pi * (s_nodes + 1.0)
        w = 0.25 * math.pi * s_weights
        p3 = a + (b - a) * np.sin(s) ** 2
        q = np.maximum(-np.polyval(quot, p3), 1e-300)
        jac = 2.0 / np.sqrt(q)
        pi1 = c0 - p3
        p5 = pi5(p3)
        # d(angle)/dt for eta_J = phi2 - phi1 and eta_N2 = phi3 - phi1
        f_j = -(t * p5 / pi1 + 4.0 * t * p3)
        f_n2 = (1.0 - 2.0 * t) + t * p5 * (pi1 - p3) / (pi1 * p3) + 4.0 * t * (pi1 - p3)
        f_alpha = (1.0 - 2.0 * t) * p3 / 2.0 + t * (1.5 * p5 + 4.0 * pi1 * p3)
        wj = w * jac
        return (
            float(np.sum(wj)),
            float(np.sum(wj * f_j)),
            float(np.sum(wj * f_n2)),
            float(np.sum(wj * f_alpha)),
        )

    n = n_start
    prev = eval_n(n)
    while n < _LEGGAUSS_MAX:
        n *= 2
        cur = eval_n(n)
        done = all(
            abs(c - p) <= rel_tol * max(1.0, abs(c)) for c, p in zip(cur, prev)
        )
        prev = cur
        if done:
            break
    big_t, theta_j, theta_n2, alpha = prev
    theta_n1 = -theta_j
    k_val = (alpha - n1 * theta_n1 - n2 * theta_n2 - j * theta_j) / (2.0 * math.pi)
    return {
        "T": big_t,
        "theta_J": theta_j,
        "theta_N1": theta_n1,
        "theta_N2": theta_n2,
        "alpha": alpha,
        "K": k_val,
    }
