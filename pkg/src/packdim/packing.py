"""Capacity, covering and packing pre-measure solvers on finite metric spaces.

Conventions, fixed once for the whole toolkit:

* capacity C_delta(E): largest subset of E whose pairwise distances are
  STRICTLY greater than delta.
* covering N_delta(E): least number of parts of diameter STRICTLY less
  than delta needed to cover E.  The strict form is what makes the
  digit-set identity N_{2^-n} = 2^{|n \\ D|} exact on discretized sets;
  both forms agree whenever no pairwise distance ties delta exactly.
* pack pre-measure: sup of sum g(r_i) over weak packings with radii
  drawn from the finite set Delta intersect (0, delta], so every
  supremum is an attained maximum over a finite search space.

All comparisons against delta are exact float comparisons.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    InvalidPackingError,
    NotLipschitzError,
    PackdimError,
    TooLargeForExactError,
)
from .metric import FiniteMetricSpace

DEFAULT_CAPACITY_CAP = 40
DEFAULT_COVERING_CAP = 24


# ---------------------------------------------------------------------------
# gauges and scales


class GaugeFunction:
    """Nondecreasing positive function on (0, inf): power law or step table."""

    def __init__(self, kind, exponent=None, table=None, label=None):
        self.kind = kind
        self.exponent = exponent
        self.table = table  # list of (radius, value), radii increasing
        self.label = label or (f"r^{exponent}" if kind == "power" else "table")
        if kind == "table":
            radii = [r for r, _ in table]
            vals = [v for _, v in table]
            if any(b <= a for a, b in zip(radii, radii[1:])):
                raise PackdimError("table radii must be strictly increasing")
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise PackdimError("gauge table must be nondecreasing")
            if min(vals) <= 0:
                raise PackdimError("gauge must be strictly positive")
            self._radii = radii
            self._vals = vals
        elif kind == "power":
            if exponent < 0:
                raise PackdimError("power-law exponent must be nonnegative")
        elif kind != "product":
            raise PackdimError(f"unknown gauge kind {kind!r}")

    @classmethod
    def power(cls, s) -> "GaugeFunction":
        return cls("power", exponent=float(s))

    @classmethod
    def from_table(cls, pairs) -> "GaugeFunction":
        return cls("table", table=sorted(pairs))

    def __call__(self, r: float) -> float:
        if r <= 0:
            raise PackdimError("gauge is defined on (0, inf)")
        if self.kind == "power":
            return r ** self.exponent
        if self.kind == "product":
            return self._f(r) * self._g(r)
        # right-continuous step: value of the smallest breakpoint >= r,
        # extended by the last value above the largest breakpoint
        i = bisect.bisect_left(self._radii, r)
        return self._vals[min(i, len(self._vals) - 1)]

    def pointwise_product(self, other: "GaugeFunction") -> "GaugeFunction":
        if self.kind == "power" and other.kind == "power":
            return GaugeFunction.power(self.exponent + other.exponent)
        prod = GaugeFunction("product", label=f"({self.label})*({other.label})")
        prod._f, prod._g = self, other
        return prod

    def check_nondecreasing(self, lo=1e-6, hi=10.0, grid=1000) -> bool:
        rs = np.linspace(lo, hi, grid)
        vs = [self(float(r)) for r in rs]
        return all(b >= a for a, b in zip(vs, vs[1:]))

    def __repr__(self):
        return f"GaugeFunction({self.label})"


class Scale:
    """Finite strictly decreasing truncation of a scale, plus an optional
    generator rule (dyadic 2^-n or geometric ratio) for extension."""

    def __init__(self, values, generator=None):
        vals = [Fraction(v) if isinstance(v, (Fraction, int)) else float(v)
                for v in values]
        if any(v <= 0 for v in vals):
            raise PackdimError("scale members must be positive")
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise PackdimError("scale must be strictly decreasing")
        self.values = list(vals)
        self.generator = generator  # ("dyadic",) | ("geometric", anchor, ratio)

    @classmethod
    def dyadic(cls, count: int, start: int = 0) -> "Scale":
        vals = [Fraction(1, 2 ** (start + k)) for k in range(count)]
        return cls(vals, generator=("dyadic", start))

    @classmethod
    def geometric(cls, anchor, ratio, count: int) -> "Scale":
        a, q = Fraction(anchor), Fraction(ratio)
        if not 0 < q < 1:
            raise PackdimError("geometric ratio must lie in (0,1)")
        vals = [a * q ** k for k in range(count)]
        return cls(vals, generator=("geometric", a, q))

    def member(self, i: int):
        """i-th generated member (extends past the stored truncation)."""
        if i < len(self.values):
            return self.values[i]
        if self.generator is None:
            raise PackdimError("scale truncation exhausted and no generator")
        if self.generator[0] == "dyadic":
            return Fraction(1, 2 ** (self.generator[1] + i))
        _, a, q = self.generator
        return a * q ** i

    def admissible(self, delta) -> list:
        """Members r with 0 < r <= delta, largest first."""
        return [v for v in self.values if v <= delta]

    def __repr__(self):
        return f"Scale({[float(v) for v in self.values[:6]]}...)"


@dataclass
class Packing:
    """Weak packing: entries (point id, radius) with d(x_i,x_j) > max(r_i,r_j)."""

    entries: list = field(default_factory=list)

    def gauge_value(self, g: GaugeFunction) -> float:
        return sum(g(float(r)) for _, r in self.entries)

    def validate(self, space: FiniteMetricSpace) -> bool:
        es = self.entries
        for a in range(len(es)):
            for b in range(a + 1, len(es)):
                (i, ri), (j, rj) = es[a], es[b]
                if space.dist(i, j) <= max(float(ri), float(rj)):
                    return False
        return True

    def is_scale_valid(self, scale: Scale, delta) -> bool:
        allowed = set(float(v) for v in scale.values)
        return all(float(r) in allowed and float(r) <= delta
                   for _, r in self.entries)

    def to_json(self) -> str:
        return json.dumps([{"point_id": int(i), "radius": float(r)}
                           for i, r in self.entries])


# ---------------------------------------------------------------------------
# capacity (maximum delta-separated set = max clique of the ">delta" graph)


@dataclass
class CapacityResult:
    count: int
    witness: list
    method: str  # "sweep" | "exact" | "greedy"

    def __int__(self):
        return self.count


def _subset_ids(space, subset):
    return list(space.points) if subset is None else sorted(subset)


def _is_line(space: FiniteMetricSpace) -> bool:
    return space.embedding is not None and space.embedding.shape[1] == 1


def _capacity_sweep(space, ids, delta) -> CapacityResult:
    # exact on the line: greedy left-to-right selection
    order = sorted(ids, key=lambda i: (float(space.embedding[i, 0]), i))
    witness = []
    last = None
    for i in order:
        x = float(space.embedding[i, 0])
        if last is None or x - last > delta:
            witness.append(i)
            last = x
    return CapacityResult(len(witness), witness, "sweep")


def _capacity_greedy(space, ids, delta) -> CapacityResult:
    witness = []
    for i in ids:  # ascending id: deterministic tie-break
        if all(space.dist(i, j) > delta for j in witness):
            witness.append(i)
    return CapacityResult(len(witness), witness, "greedy")


def _adjacency_masks(space, ids, delta, strict_greater: bool) -> list[int]:
    """Bitmask adjacency over ids (local indices).  Edge iff dist > delta
    (strict_greater) or dist < delta (for covering compatibility)."""
    m = space.matrix()[np.ix_(ids, ids)]
    adj = (m > delta) if strict_greater else (m < delta)
    np.fill_diagonal(adj, False)
    masks = []
    for row in adj:
        v = 0
        for k in np.flatnonzero(row):
            v |= 1 << int(k)
        masks.append(v)
    return masks


def _max_clique_size(adj: list[int], cand: int, best_floor: int) -> int:
    """Tomita-style branch and bound with greedy coloring bound."""
    best = best_floor

    def color_order(c):
        order, bounds = [], []
        color = 0
        while c:
            color += 1
            avail = c
            while avail:
                v = (avail & -avail).bit_length() - 1
                avail &= ~(1 << v) & ~adj[v]
                c &= ~(1 << v)
                order.append(v)
                bounds.append(color)
        return order, bounds

    def expand(c, size):
        nonlocal best
        order, bounds = color_order(c)
        for idx in range(len(order) - 1, -1, -1):
            if size + bounds[idx] <= best:
                return
            v = order[idx]
            c &= ~(1 << v)
            if size + 1 > best:
                best = size + 1
            nxt = c & adj[v]
            if nxt:
                expand(nxt, size + 1)

    expand(cand, 0)
    return best


def _lex_min_clique(adj: list[int], n: int, target: int) -> list[int]:
    """First (lexicographically minimal) clique of the known optimum size."""

    def dfs(chosen, cand, start):
        if len(chosen) == target:
            return chosen
        for v in range(start, n):
            if not (cand >> v) & 1:
                continue
            nxt = cand & adj[v]
            # optimistic bound: remaining candidates above v
            if len(chosen) + 1 + bin(nxt >> (v + 1)).count("1") < target:
                continue
            got = dfs(chosen + [v], nxt, v + 1)
            if got is not None:
                return got
        return None

    return dfs([], (1 << n) - 1, 0) or []


def capacity(space: FiniteMetricSpace, delta: float, subset=None,
             mode: str = "auto", cap: int = DEFAULT_CAPACITY_CAP) -> CapacityResult:
    """delta-capacity of E: max |F|, F subset of E with gap(F) > delta."""
    if delta <= 0:
        raise PackdimError("delta must be positive")
    ids = _subset_ids(space, subset)
    if not ids:
        return CapacityResult(0, [], "exact")
    if _is_line(space) and mode in ("auto", "exact", "greedy"):
        return _capacity_sweep(space, ids, delta)
    if mode == "greedy":
        return _capacity_greedy(space, ids, delta)
    if len(ids) > cap:
        if mode == "auto":
            return _capacity_greedy(space, ids, delta)
        raise TooLargeForExactError(
            f"exact capacity cap {cap} exceeded ({len(ids)} points)")
    adj = _adjacency_masks(space, ids, delta, strict_greater=True)
    seed = _capacity_greedy(space, ids, delta)
    size = _max_clique_size(adj, (1 << len(ids)) - 1, len(seed.witness))
    local = _lex_min_clique(adj, len(ids), size)
    witness = [ids[v] for v in local]
    return CapacityResult(size, witness, "exact")


# ---------------------------------------------------------------------------
# covering (minimum partition into parts of diameter < delta)


def _covering_sweep(space, ids, delta) -> int:
    xs = sorted(float(space.embedding[i, 0]) for i in ids)
    count = 0
    start = None
    for x in xs:
        if start is None or x - start >= delta:
            count += 1
            start = x
    return count


def _maximal_cliques(adj: list[int], n: int) -> list[int]:
    """Bron-Kerbosch with pivot, bitmask sets."""
    out = []

    def bk(r, p, x):
        if not p and not x:
            out.append(r)
            return
        u_pool = p | x
        pivot = max(range(n), key=lambda v: bin(p & adj[v]).count("1")
                    if (u_pool >> v) & 1 else -1)
        ext = p & ~adj[pivot]
        while ext:
            v = (ext & -ext).bit_length() - 1
            bit = 1 << v
            bk(r | bit, p & adj[v], x & adj[v])
            p &= ~bit
            x |= bit
            ext &= ~bit
    bk(0, (1 << n) - 1, 0)
    return out


def _covering_greedy(space, ids, delta) -> int:
    remaining = list(ids)
    count = 0
    while remaining:
        seed = remaining[0]
        part = [seed]
        rest = []
        for j in remaining[1:]:
            if all(space.dist(j, k) < delta for k in part):
                part.append(j)
            else:
                rest.append(j)
        remaining = rest
        count += 1
    return count


def _set_cover_exact(cliques: list[int], universe: int, n: int,
                     upper: int) -> int:
    """Minimum number of cliques covering the universe (branch and bound)."""
    best = upper
    max_size = max(bin(c).count("1") for c in cliques)
    cover_of = [[c for c in cliques if (c >> v) & 1] for v in range(n)]

    def rec(uncovered, used):
        nonlocal best
        if not uncovered:
            best = min(best, used)
            return
        if used + -(-bin(uncovered).count("1") // max_size) >= best:
            return
        # branch on the uncovered element with fewest covering cliques
        v = min((v for v in range(n) if (uncovered >> v) & 1),
                key=lambda v: len(cover_of[v]))
        for c in cover_of[v]:
            rec(uncovered & ~c, used + 1)

    rec(universe, 0)
    return best


def covering(space: FiniteMetricSpace, delta: float, subset=None,
             mode: str = "auto", cap: int = DEFAULT_COVERING_CAP) -> int:
    """Covering number N_delta(E): min parts of diameter < delta covering E."""
    if delta <= 0:
        raise PackdimError("delta must be positive")
    ids = _subset_ids(space, subset)
    if not ids:
        return 0
    if _is_line(space) and mode in ("auto", "exact", "greedy"):
        return _covering_sweep(space, ids, delta)
    if mode == "greedy":
        return _covering_greedy(space, ids, delta)
    if len(ids) > cap:
        if mode == "auto":
            return _covering_greedy(space, ids, delta)
        raise TooLargeForExactError(
            f"exact covering cap {cap} exceeded ({len(ids)} points)")
    n = len(ids)
    adj = _adjacency_masks(space, ids, delta, strict_greater=False)
    cliques = _maximal_cliques(adj, n)
    greedy = _covering_greedy(space, ids, delta)
    return _set_cover_exact(cliques, (1 << n) - 1, n, greedy)


def covering_bounds(space: FiniteMetricSpace, delta: float, subset=None,
                    cap: int = DEFAULT_CAPACITY_CAP) -> tuple[int, int]:
    """Sandwich bounds (lower, upper) for N_delta via C_{2 delta} <= N_delta
    and the greedy cover."""
    lo = capacity(space, 2 * delta, subset=subset, mode="auto", cap=cap).count
    hi = _covering_greedy(space, _subset_ids(space, subset), delta)
    return lo, hi


# ---------------------------------------------------------------------------
# scaled pre-measures


def box_premeasure(space: FiniteMetricSpace, g: GaugeFunction, scale: Scale,
                   delta: float, subset=None, mode: str = "auto",
                   cap: int = DEFAULT_CAPACITY_CAP):
    """max over r in Delta cap (0, delta] of C_r(E) * g(r).

    Returns (value, best_radius); (0.0, None) when no radius is admissible.
    """
    best, best_r = 0.0, None
    for r in scale.admissible(delta):
        c = capacity(space, float(r), subset=subset, mode=mode, cap=cap).count
        v = c * g(float(r))
        if v > best:
            best, best_r = v, float(r)
    return best, best_r


def _pack_components(space, ids, rmax):
    """Connected components of the interaction graph (pairs with d <= rmax);
    points in different components never constrain each other."""
    idx = {i: k for k, i in enumerate(ids)}
    seen = set()
    comps = []
    for i in ids:
        if i in seen:
            continue
        stack, comp = [i], []
        seen.add(i)
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in ids:
                if w not in seen and space.dist(v, w) <= rmax:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    del idx
    return comps


def _pack_component_exact(space, comp, radii, gvals):
    """Best weak packing of one component; radii descending, gvals aligned.

    Cast as a maximum-weight clique over (point, radius) nodes, where two
    nodes are compatible iff their points differ and satisfy the packing
    gap d > max(r_i, r_j); solved by branch and bound with a weighted
    greedy-coloring bound.
    """
    n = len(comp)
    k = len(radii)
    dist = [[space.dist(comp[a], comp[b]) for b in range(n)] for a in range(n)]
    nodes = [(a, ri) for a in range(n) for ri in range(k)]
    weights = [gvals[ri] for _, ri in nodes]
    nn = len(nodes)
    adj = [0] * nn
    for x in range(nn):
        a, ri = nodes[x]
        for y in range(x + 1, nn):
            b, rj = nodes[y]
            if a != b and dist[a][b] > radii[min(ri, rj)]:
                adj[x] |= 1 << y
                adj[y] |= 1 << x

    best_val = 0.0
    best_mask = 0

    def color_bounds(c):
        # partition candidates into mutually incompatible classes; any
        # packing takes at most one node per class, so class maxima bound
        order, bounds = [], []
        acc = 0.0
        while c:
            avail = c
            cls_max = 0.0
            cls_start = len(order)
            while avail:
                v = (avail & -avail).bit_length() - 1
                avail &= ~(1 << v) & ~adj[v]
                c &= ~(1 << v)
                order.append(v)
                cls_max = max(cls_max, weights[v])
            acc += cls_max
            bounds.extend([acc] * (len(order) - cls_start))
        return order, bounds

    def expand(c, taken, val):
        nonlocal best_val, best_mask
        order, bounds = color_bounds(c)
        for idx in range(len(order) - 1, -1, -1):
            if val + bounds[idx] <= best_val:
                return
            v = order[idx]
            c &= ~(1 << v)
            nval = val + weights[v]
            if nval > best_val:
                best_val = nval
                best_mask = taken | (1 << v)
            nxt = c & adj[v]
            if nxt:
                expand(nxt, taken | (1 << v), nval)

    expand((1 << nn) - 1, 0, 0.0)
    entries = [(comp[nodes[v][0]], radii[nodes[v][1]])
               for v in range(nn) if (best_mask >> v) & 1]
    return best_val, sorted(entries)


def pack_premeasure(space: FiniteMetricSpace, g: GaugeFunction, scale: Scale,
                    delta: float, subset=None, mode: str = "auto",
                    cap: int = DEFAULT_CAPACITY_CAP):
    """sup of g(pi) over (Delta, delta)-packings of E.

    Returns (value, Packing).  Exact search enumerates radius assignments
    per interaction-graph component; greedy assigns the largest feasible
    radius in decreasing-isolation order.
    """
    ids = _subset_ids(space, subset)
    radii = [float(r) for r in scale.admissible(delta)]
    if not ids or not radii:
        return 0.0, Packing([])
    gvals = [g(r) for r in radii]
    # a larger radius is never worse only if g is nondecreasing; keep the
    # radius list sorted descending with gauge values aligned
    order = sorted(range(len(radii)), key=lambda k: -radii[k])
    radii = [radii[k] for k in order]
    gvals = [gvals[k] for k in order]
    if mode == "greedy" or (mode == "auto" and len(ids) > cap):
        return _pack_greedy(space, ids, radii, gvals)
    if mode == "exact" and len(ids) > cap:
        raise TooLargeForExactError(
            f"exact pack cap {cap} exceeded ({len(ids)} points)")
    total = 0.0
    entries = []
    for comp in _pack_components(space, ids, radii[0]):
        v, es = _pack_component_exact(space, comp, radii, gvals)
        total += v
        entries.extend(es)
    entries.sort()
    return total, Packing(entries)


def _pack_greedy(space, ids, radii, gvals):
    # most isolated points first; ties by lowest id
    def isolation(i):
        others = [space.dist(i, j) for j in ids if j != i]
        return min(others) if others else float("inf")

    order = sorted(ids, key=lambda i: (-isolation(i), i))
    entries = []
    for i in order:
        for r in radii:
            ok = True
            for j, rj in entries:
                d = space.dist(i, j)
                if d <= r or d <= rj:
                    ok = False
                    break
            if ok:
                entries.append((i, r))
                break
    entries.sort()
    g_by_r = dict(zip(radii, gvals))
    value = sum(g_by_r[r] for _, r in entries)
    return value, Packing(entries)


# ---------------------------------------------------------------------------
# product-packing combiner (sections -> packing of X x Y)


def combine_product_packing(prod, pi: Packing, sections: dict) -> Packing:
    """Combine a packing pi of the left factor with uniform section packings.

    sections maps left point id -> list of right point ids forming a
    uniform packing at that entry's radius.  Output entries live in the
    product space; validity in the max metric is checked before return.
    """
    if not pi.validate(prod.left):
        raise InvalidPackingError("left packing is not a valid weak packing")
    entries = []
    for i, r in pi.entries:
        ys = sections.get(i, [])
        for a in range(len(ys)):
            for b in range(a + 1, len(ys)):
                if prod.right.dist(ys[a], ys[b]) <= float(r):
                    raise InvalidPackingError(
                        f"section at point {i} is not a uniform {r}-packing")
        for y in ys:
            entries.append((prod.pair(i, y), r))
    sigma = Packing(sorted(entries))
    if not sigma.validate(prod):
        raise InvalidPackingError("combined family fails the packing condition")
    return sigma


# ---------------------------------------------------------------------------
# Lipschitz finite-scale checks


def lipschitz_image_check(space: FiniteMetricSpace, target: FiniteMetricSpace,
                          fmap: dict, c: float, s: float, scales,
                          subset=None, scale_for_box: Scale | None = None):
    """Finite-scale image inequalities for a c-Lipschitz map.

    Checks, at every delta in scales:
      C_delta(f(E)) <= C_{delta/c}(E)
      box(f(E), r^s, Delta, delta) <= c^s * box(E, r^s, Delta/c, delta/c)
    Raises NotLipschitzError (with a witness pair) if f is not c-Lipschitz.
    """
    ids = _subset_ids(space, subset)
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            i, j = ids[a], ids[b]
            di = target.dist(fmap[i], fmap[j])
            if di > c * space.dist(i, j) + 1e-12:
                raise NotLipschitzError(
                    f"pair ({i},{j}) stretches by {di / space.dist(i, j):.6g} > {c}",
                    witness=(i, j))
    image = sorted(set(fmap[i] for i in ids))
    g = GaugeFunction.power(s)
    rows = []
    ok = True
    for delta in scales:
        ci = capacity(target, delta, subset=image).count
        ce = capacity(space, delta / c, subset=ids).count
        row = {"delta": delta, "capacity_image": ci, "capacity_source": ce,
               "capacity_ok": ci <= ce}
        if scale_for_box is not None:
            scaled = Scale([v / Fraction(c) if isinstance(v, Fraction) else v / c
                            for v in scale_for_box.values])
            bi, _ = box_premeasure(target, g, scale_for_box, delta, subset=image)
            be, _ = box_premeasure(space, g, scaled, delta / c, subset=ids)
            row["box_image"] = bi
            row["box_bound"] = (c ** s) * be
            row["box_ok"] = bi <= row["box_bound"] + 1e-12
        rows.append(row)
        ok = ok and row["capacity_ok"] and row.get("box_ok", True)
    return {"lipschitz_constant": c, "exponent": s, "rows": rows, "ok": ok}


# ---------------------------------------------------------------------------
# report export


def capacity_covering_rows(space, deltas, subset=None,
                           cap=DEFAULT_CAPACITY_CAP):
    """CSV-ready rows: delta,capacity_exact,capacity_greedy,covering_upper,covering_lower."""
    rows = []
    ids = _subset_ids(space, subset)
    for d in deltas:
        ce = capacity(space, d, subset=ids, mode="auto", cap=cap)
        cg = _capacity_greedy(space, ids, d)
        lo, hi = covering_bounds(space, d, subset=ids, cap=cap)
        rows.append({"delta": d, "capacity_exact": ce.count,
                     "capacity_greedy": cg.count,
                     "covering_upper": hi, "covering_lower": lo})
    return rows
