"""Assembly of representatives of the affine invariant.

Raw second actions computed orbit-by-orbit are single-valued but branch
along curves where the integration's phase bookkeeping switches sheets
(orbits grazing a coordinate axis of the ambient chart). A representative
is the unique continuation of the action off the declared vertical cut rays
and off the hyperbolic-regular segments, up to a vertical-line-preserving
affine map. The continuation is done combinatorially:

  * grid points are joined column-wise and row-wise into a graph;
  * edges crossing a cut ray or a hyperbolic-regular curve are severed,
    as are edges where the raw action jumps;
  * the connected cells are then glued back along the jump interfaces by
    affine corrections k*(x) + b with the shear k projected onto the
    lattice of admissible monodromy increments.

Cut rays are never glued across: the residual mismatch there is exactly the
prescribed slope jump of the straightened map (plus a genuine value jump
when a single cut carries several marked points). Hyperbolic-regular
crossings are never glued at all; they are the holes of the image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .actions import ActionPoint, ReturnError, second_action
from .affine import AffineMapZ, Cut, CutSpec, cut_transform, dh_density, monodromy_k
from .models import (
    IndeterminateRegionError,
    ModelError,
    OutsideImageError,
    RegionTag,
    SystemSpec,
    axis_barrier_curves,
    component_tags,
    critical_ordinates,
    hyperbolic_ordinate,
    isotropy_data,
    rank0_interior_values,
)

STRATEGIES = ("OneCutPerFlap", "OneCutPerEE", "NoCut")


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Layer:
    layer_id: int
    parent_layer: int | None
    cuts: CutSpec
    strategy: str = "OneCutPerEE"
    torus_choice: str | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise PlanError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "NoCut" and len(self.cuts):
            raise PlanError("NoCut layer cannot carry cuts")


@dataclass(frozen=True)
class LayerPlan:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        ids = [l.layer_id for l in self.layers]
        if ids != sorted(set(ids)):
            raise PlanError("layer ids must be unique and sorted")
        known = set()
        for l in self.layers:
            if l.layer_id == 0:
                if l.parent_layer is not None:
                    raise PlanError("layer 0 is the background (no parent)")
            elif l.parent_layer not in known:
                raise PlanError("parent relations must form a tree")
            known.add(l.layer_id)

    def layer(self, layer_id: int) -> Layer:
        for l in self.layers:
            if l.layer_id == layer_id:
                return l
        raise PlanError(f"no layer {layer_id}")


def default_plan(
    system: SystemSpec,
    strategy: str = "OneCutPerEE",
    eps: tuple[int, ...] | None = None,
    flap_eps: tuple[int, ...] | None = None,
    torus_choice: str | None = None,
) -> LayerPlan:
    """Plan with the system's marked rank-0 values cut per the strategy.

    ``eps`` are the background-layer signs (one per cut), ``flap_eps`` the
    flappy-layer signs where that layer has its own marked values.
    """
    kind = system.kind
    if kind == "HirzebruchToric":
        return LayerPlan((Layer(0, None, CutSpec(()), "NoCut"),))
    if kind == "CurledTori":
        return LayerPlan((Layer(0, None, CutSpec(()), "NoCut"),))
    if kind == "CurledToriFlap":
        return LayerPlan((
            Layer(0, None, CutSpec(()), "NoCut"),
            Layer(1, 0, CutSpec(()), "NoCut"),
        ))
    if kind == "Pleat":
        choice = torus_choice or "-"
        if choice not in ("+", "-"):
            raise PlanError("pleat torus_choice must be '+' or '-'")
        return LayerPlan((Layer(0, None, CutSpec(()), "NoCut", choice),))

    marks = rank0_interior_values(system)
    if kind == "JCModified":
        e = eps or (1,)
        y_c = hyperbolic_ordinate(system, marks[0][0])
        cuts = CutSpec((Cut(marks[0][0], y_c, e[0], marks[0][2]),))
        return LayerPlan((
            Layer(0, None, cuts, strategy),
            Layer(1, 0, CutSpec(()), "NoCut"),
        ))
    if kind == "FlapTwoEE":
        if strategy == "OneCutPerFlap":
            e = eps or (1,)
            x0 = marks[0][0]
            cuts = CutSpec((Cut(x0, hyperbolic_ordinate(system, x0), e[0], 2.0),))
        else:
            e = eps or (1, 1)
            cuts = CutSpec(tuple(
                Cut(x, hyperbolic_ordinate(system, x), ei, m)
                for (x, _, m), ei in zip(marks, e)
            ))
        return LayerPlan((
            Layer(0, None, cuts, strategy),
            Layer(1, 0, CutSpec(()), "NoCut"),
        ))
    if kind == "FamilyABC":
        # background cuts sit on the hyperbolic curve under each focus-focus
        # value; the flappy layer cuts at the values themselves
        e = eps or (1, 1)
        fe = flap_eps or (1, 1)
        bg = CutSpec(tuple(
            Cut(x, hyperbolic_ordinate(system, x), ei, m)
            for (x, _, m), ei in zip(marks, e)
        ))
        fl = CutSpec(tuple(
            Cut(x, y, ei, m) for (x, y, m), ei in zip(marks, fe)
        ))
        return LayerPlan((
            Layer(0, None, bg, "OneCutPerEE"),
            Layer(1, 0, fl, "OneCutPerEE"),
        ))
    raise PlanError(kind)


@dataclass
class Representative:
    points: list[ActionPoint]
    plan: LayerPlan
    layer_offsets: dict[int, tuple[float, float]] = field(default_factory=dict)
    normalization: AffineMapZ = field(default_factory=AffineMapZ.identity)
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# grid evaluation


def _monodromy_denominator(system: SystemSpec) -> int:
    den = 1
    for _, _, m in rank0_interior_values(system):
        den = max(den, Fraction(m).limit_denominator(64).denominator)
    return den


def _pleat_component(layer: Layer) -> str:
    return "PleatUpper" if layer.torus_choice == "+" else "PleatLower"


def _layer_components(system: SystemSpec, layer: Layer, tags: list[RegionTag]) -> list[RegionTag]:
    """Which fiber components of a value belong to the given layer."""
    out = []
    for tag in tags:
        if system.kind == "Pleat":
            want = _pleat_component(layer)
            if tag.label == "Outside" or tag.label == want:
                out.append(tag)
        elif tag.layer == layer.layer_id:
            out.append(tag)
    return out


def evaluate_layer(
    system: SystemSpec,
    layer: Layer,
    grid: list[tuple[float, float]],
    rtol: float = 1e-11,
) -> tuple[list[dict], dict]:
    """Raw second actions of the layer's components over the grid."""
    rows: list[dict] = []
    skipped = {"indeterminate": 0, "outside": 0, "failed": 0}
    for j, h in grid:
        try:
            tags = component_tags(system, j, h)
        except IndeterminateRegionError:
            skipped["indeterminate"] += 1
            continue
        except (OutsideImageError, ModelError):
            skipped["outside"] += 1
            continue
        for tag in _layer_components(system, layer, tags):
            try:
                pt = second_action(system, j, h, tag, rtol=rtol, atol=rtol)
            except (ReturnError, ModelError) as exc:
                skipped["failed"] += 1
                continue
            rows.append({
                "j": j, "h": h, "K_raw": pt.K, "region": tag,
                "tau": pt.branch_meta["tau"],
            })
    return rows, skipped


# ---------------------------------------------------------------------------
# continuation: cells and gluing


def _column_index(rows: list[dict]) -> list[list[int]]:
    cols: dict[float, list[int]] = {}
    for i, r in enumerate(rows):
        cols.setdefault(r["j"], []).append(i)
    ordered = []
    for j in sorted(cols):
        idx = cols[j]
        idx.sort(key=lambda i: rows[i]["h"])
        ordered.append(idx)
    return ordered


def _crosses_ray(cuts: CutSpec, j1: float, h1: float, j2: float, h2: float) -> bool:
    """Does the segment between grid neighbours cross a cut ray?  Points on
    the cut abscissa belong to the left half-plane."""
    for c in cuts:
        lo, hi = min(j1, j2), max(j1, j2)
        if lo <= c.x < hi:
            # interpolated ordinate at the crossing
            if hi > lo:
                s = (c.x - j1) / (j2 - j1)
                h_at = h1 + s * (h2 - h1)
            else:
                h_at = 0.5 * (h1 + h2)
            if c.eps * (h_at - c.y) >= 0:
                return True
    return False


def _tracked_curves(system: SystemSpec, xs: list[float]) -> dict[str, dict[float, float]]:
    """Curves over the grid columns that sever the continuation graph,
    keyed per curve with per-column ordinates.

    Hyperbolic folds are chained column to column by ordinate proximity;
    coordinate-axis barrier curves come labelled from the model.
    """
    curves: dict[str, dict[float, float]] = {}
    for x in xs:
        for name, h in axis_barrier_curves(system, x).items():
            curves.setdefault("axis:" + name, {})[x] = h

    tracks: list[dict[float, float]] = []
    prev_x = None
    for x in xs:
        try:
            crits = critical_ordinates(system, x, r_samples=800)
        except ModelError:
            crits = []
        folds = sorted(h for h, kind in crits if kind == "fold-hyperbolic")
        live = [t for t in tracks if prev_x is not None and prev_x in t]
        used = set()
        for h in folds:
            best = None
            for idx, t in enumerate(live):
                if idx in used:
                    continue
                if best is None or abs(h - t[prev_x]) < abs(h - live[best][prev_x]):
                    best = idx
            if best is not None and abs(h - live[best][prev_x]) < 0.1:
                live[best][x] = h
                used.add(best)
            else:
                tracks.append({x: h})
        prev_x = x
    for i, t in enumerate(tracks):
        curves[f"hole:{i}"] = t
    return curves


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _offset_denominator(system: SystemSpec) -> int:
    """Lattice of the vertical-offset part of admissible branch corrections
    (shear slope times a rational anchor abscissa)."""
    if system.kind in ("CurledTori", "CurledToriFlap"):
        return 2
    if system.kind == "Pleat":
        return 50
    return 1


def glue_layer(
    system: SystemSpec,
    layer: Layer,
    rows: list[dict],
) -> dict:
    """Continuation corrections per point; returns diagnostics.

    Cells are cut along analytically known curves only: declared cut rays,
    hyperbolic-regular folds (the holes) and the coordinate-axis barrier
    curves where the raw action switches branch. Axis interfaces are glued
    by affine corrections with slope and offset projected onto the system's
    monodromy lattice; hole and ray interfaces are never glued, but a cell
    reachable only through an interface with a near-zero fitted correction
    is attached with the zero correction (a spuriously severed edge).
    """
    n = len(rows)
    diag = {"interfaces": [], "residuals": [], "cells": 0, "groups": {}}
    if n == 0:
        return diag
    cols = _column_index(rows)
    xs = [rows[c[0]]["j"] for c in cols]
    curves = _tracked_curves(system, xs)
    slope_h = [rows[i]["tau"] / (2 * math.pi) for i in range(n)]

    # vertical severing lines: cut abscissas plus every abscissa where the
    # curve structure changes (flap tips, curve-domain ends, a fold curve
    # crossing an axis line), so each interface carries one affine law
    def signature(x):
        present = tuple(sorted(name for name, t in curves.items() if x in t))
        order = tuple(
            (n1, n2, curves[n1][x] > curves[n2][x])
            for i, n1 in enumerate(present) for n2 in present[i + 1:]
        )
        return (present, order)

    cut_x = sorted({float(c.x) for c in layer.cuts})
    gap = float(np.median(np.diff(xs))) if len(xs) > 1 else 1.0
    sever_x = list(cut_x)
    for x1, x2 in zip(xs, xs[1:]):
        if signature(x1) != signature(x2):
            cand = 0.5 * (x1 + x2)
            # structure changes within a column gap of a cut line are the
            # cut's own markings; keep one severing line there
            if all(abs(cand - x) > 1.5 * gap for x in sever_x):
                sever_x.append(cand)
    sever_x = sorted(sever_x)

    def crossings(a, b):
        ja, ha = rows[a]["j"], rows[a]["h"]
        jb, hb = rows[b]["j"], rows[b]["h"]
        kinds = set()
        if _crosses_ray(layer.cuts, ja, ha, jb, hb):
            kinds.add("ray")
        else:
            lo, hi = min(ja, jb), max(ja, jb)
            for x in sever_x:
                if lo <= x < hi:
                    kinds.add("cutline")
                    break
        # signed offset from each tracked curve at each endpoint's own column
        for name, t in curves.items():
            if ja in t and jb in t:
                if (ha - t[ja]) * (hb - t[jb]) < 0:
                    kinds.add("hole" if name.startswith("hole") else "axis")
        return [k for k in ("ray", "cutline", "hole", "axis") if k in kinds]

    hpairs = set()
    for c1, c2 in zip(cols, cols[1:]):
        h2 = np.array([rows[i]["h"] for i in c2])
        for a in c1:
            k = int(np.argmin(np.abs(h2 - rows[a]["h"])))
            hpairs.add((a, c2[k]))
        h1 = np.array([rows[i]["h"] for i in c1])
        for b in c2:
            k = int(np.argmin(np.abs(h1 - rows[b]["h"])))
            hpairs.add((c1[k], b))

    edges = []
    for col in cols:
        for a, b in zip(col, col[1:]):
            edges.append((a, b, crossings(a, b)))
    for a, b in hpairs:
        edges.append((a, b, crossings(a, b)))

    uf = _UnionFind(n)
    for a, b, kinds in edges:
        if not kinds:
            uf.union(a, b)
    cells: dict[int, list[int]] = {}
    for i in range(n):
        cells.setdefault(uf.find(i), []).append(i)
    cell_ids = {root: ci for ci, root in enumerate(sorted(cells))}
    diag["cells"] = len(cells)

    # interface samples keyed by (cell pair, kind): delta is K(lower cell)
    # minus K(higher cell), extrapolated to the edge midpoint along dK/dh;
    # edges crossing several structures at once are dropped from sampling
    iface: dict[tuple[int, int, str], list[tuple[float, float, float, float]]] = {}
    for a, b, kinds in edges:
        if not kinds:
            continue
        ca, cb = cell_ids[uf.find(a)], cell_ids[uf.find(b)]
        if ca == cb:
            diag["residuals"].append(
                ("internal-" + "+".join(kinds), rows[a]["j"], rows[a]["h"],
                 rows[b]["K_raw"] - rows[a]["K_raw"])
            )
            continue
        if len(kinds) > 1:
            continue
        key = (min(ca, cb), max(ca, cb), kinds[0])
        h_mid = 0.5 * (rows[a]["h"] + rows[b]["h"])
        j_mid = 0.5 * (rows[a]["j"] + rows[b]["j"])
        lo_pt, hi_pt = (a, b) if ca < cb else (b, a)
        d_lo = rows[lo_pt]["K_raw"] + slope_h[lo_pt] * (h_mid - rows[lo_pt]["h"])
        d_hi = rows[hi_pt]["K_raw"] + slope_h[hi_pt] * (h_mid - rows[hi_pt]["h"])
        iface.setdefault(key, []).append(
            (j_mid, d_lo - d_hi, rows[lo_pt]["j"], h_mid)
        )

    den = _monodromy_denominator(system)
    bden = _offset_denominator(system)

    def fitted(key):
        pts = np.array(iface[key])
        jm, delta = pts[:, 0], pts[:, 1]
        if np.ptp(jm) > 1e-9:
            a_fit, b_fit = np.polyfit(jm, delta, 1)
        else:
            a_fit, b_fit = 0.0, float(np.mean(delta))
        a_lat = round(a_fit * den) / den
        b_free = float(np.mean(delta - a_lat * jm))
        b_lat = round(b_free * bden) / bden
        ok = abs(a_fit - a_lat) < 0.45 / den and abs(b_free - b_lat) < 0.3 / bden
        return a_lat, (b_lat if ok else b_free), ok, len(jm)

    ref_cell = cell_ids[uf.find(min(
        range(n), key=lambda i: (rows[i]["j"], rows[i]["h"])
    ))]
    corr: dict[int, tuple[float, float]] = {}
    group_of: dict[int, int] = {}

    def ray_law(key):
        """Prescribed correction increment across a cut ray (walking from
        the lower-id cell): continuity at the ray plus the slope jump by
        the accumulated multiplicity."""
        pts = np.array(iface[key])
        jm = pts[:, 0]
        x_c = min((float(c.x) for c in layer.cuts),
                  key=lambda x: abs(x - float(np.mean(jm))))
        h_mid = float(np.mean(pts[:, 3]))
        k_c = float(monodromy_k(layer.cuts, (x_c, h_mid)))
        lower_left = float(np.mean(pts[:, 2])) <= x_c
        kappa = -k_c if lower_left else k_c
        return kappa, -kappa * x_c

    # constraints in decreasing evidence order: prescribed ray laws and
    # well-sampled fitted seams first, ambiguous scraps last
    constraints = []
    for key in iface:
        ca, cb, kind = key
        m = len(iface[key])
        if kind == "ray" and len(layer.cuts):
            try:
                a_glue, b_glue = ray_law(key)
            except Exception:
                continue
            constraints.append((10000 + m, key, a_glue, b_glue, True))
        elif kind in ("axis", "cutline"):
            a_lat, b_lat, ok, _ = fitted(key)
            weight = (1000 + m) if (ok and m >= 3) else m
            constraints.append((weight, key, a_lat, b_lat, ok))
    constraints.sort(key=lambda c: -c[0])

    def attach_pass():
        progressed = True
        while progressed:
            progressed = False
            for weight, key, a_glue, b_glue, ok in constraints:
                ca, cb, _ = key
                if (ca in corr) == (cb in corr):
                    continue
                src, dst = (ca, cb) if ca in corr else (cb, ca)
                ka, kb = corr[src]
                sign = 1.0 if key[0] == src else -1.0
                corr[dst] = (ka + sign * a_glue, kb + sign * b_glue)
                group_of[dst] = group_of[src]
                diag["interfaces"].append((key, a_glue, b_glue, ok, weight))
                progressed = True
                break

    corr[ref_cell] = (0.0, 0.0)
    group_of[ref_cell] = ref_cell
    attach_pass()
    # a cell reachable only through a hole is attached when the seam is
    # continuous within tight noise (spurious severing)
    changed = True
    while changed:
        changed = False
        for key in list(iface):
            ca, cb, kind = key
            if kind != "hole" or (ca in corr) == (cb in corr):
                continue
            pts = np.array(iface[key])
            if np.max(np.abs(pts[:, 1])) > 0.02:
                continue
            src, dst = (ca, cb) if ca in corr else (cb, ca)
            corr[dst] = corr[src]
            group_of[dst] = group_of[src]
            diag["interfaces"].append((key, 0.0, 0.0, True, len(pts)))
            attach_pass()
            changed = True

    for root in cells:
        ci = cell_ids[root]
        if ci not in corr:
            corr[ci] = (0.0, 0.0)
            group_of[ci] = ci
            attach_pass()

    for i in range(n):
        ci = cell_ids[uf.find(i)]
        ka, kb = corr[ci]
        rows[i]["K"] = rows[i]["K_raw"] + ka * rows[i]["j"] + kb
        rows[i]["cell"] = ci
        rows[i]["group"] = group_of[ci]

    diag["groups"] = {cell_ids[r]: group_of[cell_ids[r]] for r in cells}

    # residual mismatch across every interface after correction (rays keep
    # their prescribed slope jump; holes their vertical extent jump)
    for key in iface:
        pts = np.array(iface[key])
        ca, cb, kind = key
        ka_a, kb_a = corr.get(ca, (0.0, 0.0))
        ka_b, kb_b = corr.get(cb, (0.0, 0.0))
        res = pts[:, 1] + (ka_a - ka_b) * pts[:, 0] + (kb_a - kb_b)
        diag["residuals"].append(
            (kind, (ca, cb), float(np.mean(res)), float(np.max(np.abs(res))), len(res))
        )
    return diag


def build_representative(
    system: SystemSpec,
    plan: LayerPlan,
    grid: list[tuple[float, float]],
    rtol: float = 1e-11,
    reference: str = "min-j",
) -> Representative:
    """Evaluate, continue and normalize the action map over the grid."""
    points: list[ActionPoint] = []
    diagnostics: dict = {"skipped": {}, "layers": {}}
    for layer in plan.layers:
        rows, skipped = evaluate_layer(system, layer, grid, rtol=rtol)
        diagnostics["skipped"][layer.layer_id] = skipped
        diag = glue_layer(system, layer, rows)
        diagnostics["layers"][layer.layer_id] = diag
        if not rows:
            continue
        # pin K = 0 at each glued group's reference point (lowest j, then
        # lowest h); disjoint structures carry independent constants.
        # stray micro-groups (points severed on all sides) are dropped
        group_size: dict[int, int] = {}
        for r in rows:
            group_size[r.get("group", 0)] = group_size.get(r.get("group", 0), 0) + 1
        keep = {g for g, s in group_size.items() if s >= 3}
        rows = [r for r in rows if r.get("group", 0) in keep]
        diagnostics["skipped"][layer.layer_id]["stray"] = sum(
            s for g, s in group_size.items() if g not in keep
        )
        offsets: dict[int, float] = {}
        for g in sorted({r.get("group", 0) for r in rows}):
            ref = min(
                (r for r in rows if r.get("group", 0) == g),
                key=lambda r: (r["j"], r["h"]),
            )
            offsets[g] = ref["K"]
        for r in rows:
            points.append(ActionPoint(
                r["j"], r["K"] - offsets[r.get("group", 0)], r["region"],
                {
                    "component": r["region"].label,
                    "h": r["h"],
                    "cell": r.get("cell", 0),
                    "group": r.get("group", 0),
                    "correction": r["K"] - r["K_raw"],
                    "layer": layer.layer_id,
                },
            ))
    return Representative(points, plan, {}, AffineMapZ.identity(), diagnostics)


def normalize(rep: Representative, t_element: AffineMapZ) -> Representative:
    """Apply an element of the vertical-line-preserving subgroup."""
    if not t_element.preserves_vertical_lines():
        raise ValueError("normalization must preserve vertical lines")
    pts = []
    for p in rep.points:
        _, ky = t_element((p.j, p.K))
        pts.append(ActionPoint(p.j, ky, p.region, dict(p.branch_meta)))
    return Representative(
        pts, rep.plan, dict(rep.layer_offsets),
        t_element.compose(rep.normalization), dict(rep.diagnostics),
    )


def verify_heights(
    rep: Representative,
    data,
    x_samples: int = 50,
    flap_windows: tuple[tuple[float, float], ...] = (),
) -> dict:
    """Compare the layer-0 vertical extent against the DH density at sampled
    abscissas outside the flap projections; fit boundary slopes and report
    the slope drops at marked projections."""
    from collections import defaultdict

    cols = defaultdict(list)
    for p in rep.points:
        if p.branch_meta.get("layer", 0) == 0:
            cols[p.j].append(p.K)
    xs = sorted(cols)
    usable = [
        x for x in xs
        if not any(lo <= x <= hi for lo, hi in flap_windows) and len(cols[x]) >= 2
    ]
    if len(usable) > x_samples:
        sel = np.linspace(0, len(usable) - 1, x_samples).astype(int)
        usable = [usable[i] for i in sel]
    worst = 0.0
    report_rows = []
    for x in usable:
        extent = max(cols[x]) - min(cols[x])
        rho = dh_density(data, x)
        dev = abs(extent - rho)
        worst = max(worst, dev)
        report_rows.append((x, extent, rho, dev))
    # piecewise-linear slope of top/bottom boundaries between sampled x
    slopes = []
    for (x1, e1, _, _), (x2, e2, _, _) in zip(report_rows, report_rows[1:]):
        if x2 > x1:
            slopes.append((0.5 * (x1 + x2), (e2 - e1) / (x2 - x1)))
    return {"rows": report_rows, "max_deviation": worst, "extent_slopes": slopes}
