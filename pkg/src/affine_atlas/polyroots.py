"""Real root isolation for the low-degree reduced-curve polynomials.

Sturm-sequence isolation on a closed interval, then bisection plus Newton
polishing. Degrees here are at most six and coefficients are O(1)-scaled, so
a float Sturm chain with a deflation guard is reliable. Double roots at folds
are reported with multiplicity by checking tangency through the derivative.
"""

from __future__ import annotations

import math

import numpy as np

_TINY = 1e-300


def _polish(c: np.ndarray, x: float, lo: float, hi: float, iters: int = 80) -> float:
    dc = np.polyder(c)
    settled = 0
    for _ in range(iters):
        f = np.polyval(c, x)
        d = np.polyval(dc, x)
        if d == 0.0:
            break
        step = f / d
        x_new = x - step
        if not (lo - 1e-12 <= x_new <= hi + 1e-12):
            break
        x = x_new
        # run two extra iterations past apparent convergence: endpoint
        # quadratures are sensitive to the last bit of root accuracy
        if abs(step) < 4e-16 * max(1.0, abs(x)):
            settled += 1
            if settled >= 3:
                break
    return min(max(x, lo), hi)


def _sturm_chain(c: np.ndarray) -> list[np.ndarray]:
    chain = [c, np.polyder(c)]
    scale = np.max(np.abs(c)) + _TINY
    while len(chain[-1]) > 1:
        _, rem = np.polydiv(chain[-2], chain[-1])
        rem = -rem
        # drop a numerically-null remainder: the chain then ends at a gcd,
        # which is the square-free reduction we want near multiple roots
        if np.max(np.abs(rem)) < 1e-13 * scale:
            break
        rem = np.trim_zeros(rem, "f")
        if rem.size == 0:
            break
        chain.append(rem)
    return chain


def _sign_changes(chain: list[np.ndarray], x: float) -> int:
    signs = []
    for p in chain:
        v = np.polyval(p, x)
        if v != 0.0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _count_roots(chain: list[np.ndarray], lo: float, hi: float) -> int:
    return _sign_changes(chain, lo) - _sign_changes(chain, hi)


def real_roots_in_interval(
    coeffs,
    lo: float,
    hi: float,
    dedup_tol: float = 1e-10,
) -> tuple[np.ndarray, np.ndarray]:
    """Distinct real roots of the polynomial in [lo, hi], ascending, with
    multiplicities.

    ``coeffs`` are ascending (constant term first). Roots closer together
    than ``dedup_tol`` are merged. A root where the polynomial is tangent
    (derivative vanishing at matching scale) is reported with multiplicity 2.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=float)[::-1], "f")
    if c.size == 0:
        raise ValueError("zero polynomial has no isolated roots")
    if c.size == 1:
        return np.empty(0), np.empty(0, dtype=int)
    if lo > hi:
        return np.empty(0), np.empty(0, dtype=int)

    scale = max(np.max(np.abs(c)), 1.0)
    span = max(hi - lo, 1.0)
    chain = _sturm_chain(c)

    # nudge endpoints off exact roots for the Sturm counts; exact endpoint
    # roots are re-attached below
    eps = 1e-14 * span
    intervals = [(lo - eps, hi + eps)]
    isolated: list[tuple[float, float]] = []
    for _ in range(200):
        if not intervals:
            break
        nxt = []
        for a, b in intervals:
            n = _count_roots(chain, a, b)
            if n == 0:
                continue
            if n == 1 or (b - a) < 1e-13 * span:
                isolated.append((a, b))
                continue
            m = 0.5 * (a + b)
            nxt.append((a, m))
            nxt.append((m, b))
        intervals = nxt

    roots = []
    for a, b in isolated:
        fa = np.polyval(c, a)
        x_lo, x_hi = a, b
        for _ in range(120):
            m = 0.5 * (x_lo + x_hi)
            fm = np.polyval(c, m)
            if fm == 0.0:
                x_lo = x_hi = m
                break
            if (fa < 0) != (fm < 0):
                x_hi = m
            else:
                x_lo, fa = m, fm
            if x_hi - x_lo < 1e-15 * span:
                break
        roots.append(_polish(c, 0.5 * (x_lo + x_hi), lo, hi))

    # endpoint roots that the nudged Sturm count may have dropped
    dc = np.polyder(c)
    for x_end in (lo, hi):
        fe = np.polyval(c, x_end)
        de = abs(np.polyval(dc, x_end)) + scale / span
        if abs(fe) < 1e-11 * de * max(1.0, span):
            refined = _polish(c, x_end, lo, hi)
            roots.append(refined)

    roots.sort()
    merged: list[float] = []
    for r in roots:
        if merged and abs(r - merged[-1]) <= dedup_tol * max(1.0, abs(r)):
            merged[-1] = 0.5 * (merged[-1] + r)
        else:
            merged.append(r)

    vals = np.array(merged)
    mult = np.ones(len(merged), dtype=int)
    # tangency check: |p'(r)| small at the scale of p'' marks a double root
    ddc = np.polyder(dc)
    for i, r in enumerate(vals):
        d1 = np.polyval(dc, r)
        d2 = np.polyval(ddc, r) if ddc.size else 0.0
        if abs(d1) < 1e-7 * max(abs(d2) * max(1.0, abs(r)), scale * 1e-8):
            mult[i] = 2
    return vals, mult
