"""Symbolic generators with exact scaling oracles.

Three families:

* digit-restricted Cantor sets (binary digits forced to zero on or off an
  infinite position set D), with the exact covering identity
  N_{2^-n} = 2^{|n \\ D|} (forced-zero-on) resp. 2^{|n cap D|};
* the log-sequence set {1/log n : 2 <= n <= N} union {0};
* the recursive nested-interval construction Y (and its power Z = Y^m)
  whose branching g(n) and interval lengths r_n are tuned so that
  G(n) * r_n^{1-p} stays within (1 - 1/n, 1 + 1/n).

The nested-interval construction is carried out in exact rational
arithmetic (interval lengths as Fractions, G(n) as big integers), so all
its defining inequalities are verified exactly even when the lengths
underflow double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    DepthExceededError,
    InvalidBlocksError,
    LevelMismatchError,
    PackdimError,
    ScaleOutOfRangeError,
    ScaleTooCoarseError,
    TooManyPointsError,
)
from .metric import FiniteMetricSpace
from .packing import Scale

MATERIALIZE_CAP = 1 << 20


# ---------------------------------------------------------------------------
# digit-restricted Cantor sets


@dataclass(frozen=True)
class DigitBlock:
    start: int
    end: int  # half-open
    in_d: bool


class DigitBlocks:
    """Alternating in/out run representation of an infinite D subset of N."""

    def __init__(self, blocks: list[DigitBlock]):
        if not blocks:
            raise InvalidBlocksError("at least one block required")
        pos = 0
        for b in blocks:
            if b.start != pos or b.end <= b.start:
                raise InvalidBlocksError("blocks must tile N contiguously")
            pos = b.end
        if not any(b.in_d for b in blocks):
            raise InvalidBlocksError("D must be infinite (no in-blocks found)")
        self.blocks = blocks
        self.limit = pos
        # prefix counts of |k cap D|
        self._prefix = [(b.start, b.end, b.in_d) for b in blocks]

    def contains(self, k: int) -> bool:
        if k >= self.limit:
            raise DepthExceededError(f"position {k} beyond generated blocks")
        for s, e, ind in self._prefix:
            if s <= k < e:
                return ind
        raise AssertionError

    def count_in(self, n: int) -> int:
        """|n cap D| = number of positions k < n with k in D."""
        if n > self.limit:
            raise DepthExceededError(f"level {n} beyond generated blocks")
        c = 0
        for s, e, ind in self._prefix:
            if s >= n:
                break
            if ind:
                c += min(e, n) - s
        return c

    def density(self, n: int) -> float:
        return self.count_in(n) / n if n else 0.0

    def block_ends(self, in_d: bool) -> list[int]:
        return [b.end for b in self.blocks if b.in_d == in_d]

    def f_subsequence(self, n_max: int) -> list[int]:
        """Levels n <= n_max with (n-1)/2 < |n cap D| <= n/2 (the density
        half-crossings); only even n can qualify."""
        out = []
        for n in range(2, min(n_max, self.limit) + 1):
            c = self.count_in(n)
            if n - 1 < 2 * c <= n:
                out.append(n)
        return out


def make_digit_blocks(num_blocks: int = 26, lengths=None) -> DigitBlocks:
    """Default D: alternating out/in runs starting with a length-1 out run,
    each subsequent run as long as k times everything before it.

    The runs overwhelm the history, so the running density of D drops
    toward 0 after every out run and climbs toward 1 after every in run,
    realizing liminf 0 / limsup 1 at a checkable rate.
    """
    if lengths is not None:
        if any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise InvalidBlocksError("explicit block lengths must increase")
        ls = list(lengths)
    else:
        ls = [1]
        total = 1
        for k in range(2, num_blocks + 1):
            ls.append(k * total)
            total += ls[-1]
    blocks = []
    pos = 0
    for i, length in enumerate(ls):
        blocks.append(DigitBlock(pos, pos + length, in_d=(i % 2 == 1)))
        pos += length
    return DigitBlocks(blocks)


class DigitSet:
    """Cantor-type set of binary expansions x-hat = sum 2^-n-1 x(n) with
    digits forced to zero on D (variant 'k0') or off D (variant 'k1')."""

    def __init__(self, blocks: DigitBlocks, variant: str = "k0",
                 depth: int | None = None):
        if variant not in ("k0", "k1"):
            raise PackdimError("variant must be 'k0' or 'k1'")
        self.blocks = blocks
        self.variant = variant
        self.depth = blocks.limit if depth is None else min(depth, blocks.limit)

    def free_count(self, n: int) -> int:
        """Number of unconstrained digit positions below level n."""
        if n > self.depth:
            raise DepthExceededError(f"level {n} > depth {self.depth}")
        c = self.blocks.count_in(n)
        return n - c if self.variant == "k0" else c

    def covering_count(self, n: int) -> int:
        """Exact N_{2^-n}: one per surviving binary interval of length 2^-n."""
        return 1 << self.free_count(n)

    def free_positions(self, n: int) -> list[int]:
        want = (self.variant == "k1")
        return [k for k in range(n) if self.blocks.contains(k) == want]

    def slope(self, n: int) -> float:
        """log N_{2^-n} / |log 2^-n| = free_count(n) / n exactly."""
        return self.free_count(n) / n

    def forced_run_ends(self, n_max: int | None = None) -> list[int]:
        """Levels ending a maximal run of forced-zero digits — the levels
        where the covering slope dips lowest for this variant."""
        ends = self.blocks.block_ends(self.variant == "k0")
        cut = self.depth if n_max is None else min(n_max, self.depth)
        return [e for e in ends if e <= cut]

    def scaling_rows(self, levels):
        """Oracle rows at dyadic scales 2^-n, in log space so that depths
        beyond float range still carry exact slopes."""
        from .estimators import ScalingRow
        ln2 = math.log(2.0)
        rows = []
        for n in levels:
            ld = -n * ln2
            lc = self.free_count(n) * ln2
            rows.append(ScalingRow(
                math.exp(ld) if ld > -700 else 0.0,
                math.exp(lc) if lc < 700 else math.inf,
                "oracle", log_delta=ld, log_count=lc))
        return rows

    def discretize(self, n: int, cap: int = MATERIALIZE_CAP) -> FiniteMetricSpace:
        """Left endpoints of the surviving level-n intervals (exact dyadic
        floats)."""
        free = self.free_positions(n)
        if 1 << len(free) > cap:
            raise TooManyPointsError(
                f"2^{len(free)} points exceeds cap {cap}")
        vals = np.zeros(1)
        for k in free:
            vals = np.concatenate([vals, vals + 2.0 ** (-k - 1)])
        vals.sort()
        return FiniteMetricSpace.from_points(vals, label=f"{self.variant}@{n}")


# ---------------------------------------------------------------------------
# log-sequence set


class LogSequenceSet:
    """{1/log n : 2 <= n <= N} union {0}."""

    def __init__(self, N: int):
        if N < 2:
            raise PackdimError("cutoff N must be >= 2")
        self.N = N

    @staticmethod
    def value(n: int) -> float:
        return 1.0 / math.log(n)

    def spacing(self, n: int) -> float:
        return self.value(n) - self.value(n + 1)

    def _largest_index_at_least(self, c: float) -> int | None:
        """Largest n in [2, N] with value(n) >= c, or None."""
        if c <= 0:
            return self.N
        if self.value(2) < c:
            return None
        if 1.0 / c >= math.log(self.N):
            n = self.N
        else:
            n = min(self.N, max(2, int(math.exp(1.0 / c))))
        while n < self.N and self.value(n + 1) >= c:
            n += 1
        while n >= 2 and self.value(n) < c:
            n -= 1
        return n if n >= 2 else None

    def covering_sweep(self, delta: float) -> int:
        """Exact N_delta by left-to-right greedy sweep on the symbolic
        sequence; O(N_delta) iterations, no materialization."""
        if delta <= 0:
            raise PackdimError("delta must be positive")
        count = 1  # window starting at 0
        edge = delta  # windows are [start, start + delta)
        while True:
            n = self._largest_index_at_least(edge)
            if n is None:
                return count
            count += 1
            edge = self.value(n) + delta

    def covering_estimate(self, delta: float) -> int:
        """Closed-form spacing oracle: points with consecutive spacing
        > delta counted individually, the dense stretch by its length.
        Agrees with the sweep to within a small constant factor."""
        if delta <= 0:
            raise PackdimError("delta must be positive")
        lo, hi = 2, self.N
        if self.spacing(2) <= delta:
            n_star = 2
        elif self.spacing(self.N - 1) > delta if self.N > 2 else False:
            n_star = self.N
        else:
            while hi - lo > 1:  # spacing decreases in n
                mid = (lo + hi) // 2
                if self.spacing(mid) > delta:
                    lo = mid
                else:
                    hi = mid
            n_star = hi
        sparse = n_star - 2
        dense_len = max(0.0, self.value(n_star) - self.value(self.N))
        return sparse + int(math.ceil(dense_len / delta)) + 1

    def slope_estimate(self, delta: float) -> float:
        return math.log(self.covering_estimate(delta)) / abs(math.log(delta))

    SWEEP_FLOOR = 1e-5

    def covering_count(self, delta: float) -> int:
        """Exact sweep down to SWEEP_FLOOR, spacing estimate below (the
        sweep cost grows like the count itself)."""
        if delta >= self.SWEEP_FLOOR:
            return self.covering_sweep(delta)
        return self.covering_estimate(delta)

    def discretize(self, cap: int = MATERIALIZE_CAP) -> FiniteMetricSpace:
        if self.N > cap:
            raise TooManyPointsError(f"{self.N} points exceeds cap {cap}")
        vals = [0.0] + [self.value(n) for n in range(self.N, 1, -1)]
        return FiniteMetricSpace.from_points(vals, label=f"logset@{self.N}")


# ---------------------------------------------------------------------------
# recursive nested-interval construction (Y and Z = Y^m)


@dataclass
class ZConstruction:
    """Exact data of the nested-interval construction.

    kind is 'cantor' for 0 < s < m, 'unit_cube' for s = 0 and 'origin'
    for s = m (the two documented degenerate endpoints).
    """

    s: Fraction
    m: int
    n_max: int
    kind: str
    p: Fraction = Fraction(0)
    r: list = field(default_factory=list)      # Fractions r_0..r_n_max
    g: list = field(default_factory=list)      # ints g(0)..g(n_max-1)
    G: list = field(default_factory=list)      # ints G(0)..G(n_max)
    u: list = field(default_factory=list)      # Fractions u_0..u_n_max-1

    # ---- derived exact quantities ----

    def theta(self, n: int) -> Fraction:
        return 1 + Fraction(1, n)

    def span(self, n: int) -> Fraction:
        """Exact diameter of the depth-n_max left-endpoint cloud inside a
        depth-n cell: sum_{k=n}^{n_max-1} (g(k)-1) r_{k+1}."""
        return sum(((self.g[k] - 1) * self.r[k + 1]
                    for k in range(n, self.n_max)), Fraction(0))

    def _pow_parts(self):
        """1 - p as b/a in lowest terms."""
        q = 1 - self.p
        return q.numerator, q.denominator

    def scaling_value_bounds(self, n: int) -> tuple[float, float]:
        """Exact-in, float-out (lower, upper) admissible band for
        G(n) r_n^{1-p} from the defining inequality."""
        lo = 1 - 1 / n
        hi = 1 + 1 / n
        return lo, hi

    def log_r(self, n: int) -> float:
        rn = self.r[n]
        return math.log(rn.numerator) - math.log(rn.denominator)

    def log_u(self, n: int) -> float:
        un = self.u[n]
        return math.log(un.numerator) - math.log(un.denominator)

    def verify_invariants(self) -> list[str]:
        """Exact checks of every defining inequality; returns violations."""
        out = []
        if self.kind != "cantor":
            return out
        b, a = self._pow_parts()
        for n in range(1, self.n_max + 1):
            # (1 - 1/n)^a < G(n)^a r_n^b < (1 + 1/n)^a, all exact rationals
            val = Fraction(self.G[n]) ** a * self.r[n] ** b
            if not Fraction(n - 1, n) ** a < val < Fraction(n + 1, n) ** a:
                out.append(f"scaling band fails at level {n}")
        for n in range(1, self.n_max):
            if not self.r[n + 1] < self.u[n]:
                out.append(f"r_{n + 1} < u_{n} fails")
            if not self.u[n] < self.r[n] / n:
                out.append(f"u_{n} < r_{n}/{n} fails")
        for n in range(self.n_max):
            gn = self.g[n]
            if gn < 2 or gn % 2:
                out.append(f"g({n}) = {gn} is not an even integer >= 2")
            # open-interval membership and minimality of the even choice
            if not self._g_above_lower(gn, n):
                out.append(f"g({n}) below the admissible interval")
            if not self._g_below_upper(gn, n):
                out.append(f"g({n}) above the admissible interval")
            if gn > 2 and self._g_above_lower(gn - 2, n):
                out.append(f"g({n}) is not the smallest admissible even integer")
            if not self.u[n] <= self.r[n]:
                out.append(f"children escape the parent at level {n}")
        return out

    def _g_above_lower(self, gn: int, n: int) -> bool:
        # gn > (1 - 1/(n+1)) / (G(n) r_{n+1}^{1-p})
        b, a = self._pow_parts()
        lhs = Fraction(gn) ** a * Fraction(self.G[n]) ** a * self.r[n + 1] ** b
        return lhs > Fraction(n, n + 1) ** a

    def _g_below_upper(self, gn: int, n: int) -> bool:
        b, a = self._pow_parts()
        lhs = Fraction(gn) ** a * Fraction(self.G[n]) ** a * self.r[n + 1] ** b
        return lhs < Fraction(n + 2, n + 1) ** a

    # ---- covering oracles ----

    def covering_at_u(self, n: int) -> int:
        """Exact N_{u_n} of the construction: G(n), provided the verified
        geometry (cell spread < u_n <= cross-cell gap) holds."""
        if not 0 <= n < self.n_max:
            raise ScaleOutOfRangeError(f"u_{n} not defined at depth {self.n_max}")
        if n == 0:
            return self.G[0]
        sp = self.span(n)
        if not sp < self.u[n]:
            raise PackdimError("cell spread is not below u_n")
        if not self.r[n] - sp >= self.u[n]:
            raise PackdimError("cross-cell gap is below u_n")
        return self.G[n]

    def covering_bound(self, rr) -> dict:
        """Closed-form upper bounds on N_r(Y) and N_r(Z) <= N_r(Y)^m for
        r in [r_n_max, r_0]; also the exact tree count when feasible."""
        r = Fraction(rr) if not isinstance(rr, Fraction) else rr
        if not self.r[self.n_max] <= r <= self.r[0]:
            raise ScaleOutOfRangeError("r outside [r_n_max, r_0]")
        for n in range(self.n_max):
            if self.u[n] <= r <= self.r[n]:
                ny = self.G[n]
                band = (n, "coarse")
                break
            if self.r[n + 1] <= r < self.u[n]:
                # N_r(Y) <= G(n) (u_n / r + 1) <= 2 G(n) u_n / r
                ny = math.ceil(self.G[n] * (self.u[n] / r + 1))
                band = (n, "fine")
                break
        else:
            ny = self.G[self.n_max]
            band = (self.n_max, "floor")
        exact = None
        if self.G[self.n_max] <= 1 << 14:
            from .packing import covering as _cov
            exact = _cov(self.discretize_y(self.n_max), float(r))
        return {"r": float(r), "band": band, "ny_bound": ny,
                "nz_bound": ny ** self.m, "exact_y": exact}

    # ---- materialization and measure ----

    def cell_endpoint(self, tau: tuple) -> Fraction:
        a = Fraction(0)
        for lvl, digit in enumerate(tau):
            if not 0 <= digit < self.g[lvl]:
                raise PackdimError(f"digit {digit} out of range at level {lvl}")
            a += digit * self.r[lvl + 1]
        return a

    def discretize_y(self, level: int, cap: int = MATERIALIZE_CAP) -> FiniteMetricSpace:
        """Left endpoints of the depth-`level` cells of Y."""
        if level > self.n_max:
            raise DepthExceededError(f"level {level} > depth {self.n_max}")
        if self.G[level] > cap:
            raise TooManyPointsError(f"G({level}) = {self.G[level]} exceeds cap")
        vals = [Fraction(0)]
        for lvl in range(level):
            step = self.r[lvl + 1]
            vals = [v + i * step for v in vals for i in range(self.g[lvl])]
        return FiniteMetricSpace.from_points(
            sorted(float(v) for v in vals), label=f"Y@{level}")

    def cell_measure(self, taus) -> Fraction:
        """Mass of a depth-n product cell: G(n)^-m, exact."""
        if len(taus) != self.m:
            raise LevelMismatchError(f"need {self.m} tree nodes, got {len(taus)}")
        levels = {len(t) for t in taus}
        if len(levels) != 1:
            raise LevelMismatchError("all components must sit at one level")
        n = levels.pop()
        if n > self.n_max:
            raise DepthExceededError(f"level {n} > depth {self.n_max}")
        for t in taus:
            self.cell_endpoint(tuple(t))  # digit range validation
        return Fraction(1, self.G[n] ** self.m)

    def manifest(self) -> dict:
        """Golden-file form: exact values as decimal strings."""
        def frac_str(x: Fraction) -> str:
            return f"{x.numerator}/{x.denominator}"
        return {
            "s": frac_str(self.s), "m": self.m, "kind": self.kind,
            "n_max": self.n_max,
            "r": [frac_str(x) for x in self.r],
            "g": [str(x) for x in self.g],
            "G": [str(x) for x in self.G],
            "u": [frac_str(x) for x in self.u],
        }


def _iroot(x: int, a: int) -> int:
    """Floor of the integer a-th root (Newton iteration on big ints)."""
    if x <= 0:
        return 0
    if a == 1:
        return x
    r = 1 << -(-x.bit_length() // a)
    while True:
        nxt = ((a - 1) * r + x // r ** (a - 1)) // a
        if nxt >= r:
            return r
        r = nxt


def _first_admissible_index(scale: Scale, start: int, pred) -> int:
    """Smallest generator index >= start satisfying a predicate that is
    monotone in the index (gallop out, then binary search back)."""
    step = 1
    hi = start
    probes = 0
    while not pred(scale.member(hi)):
        hi += step
        step *= 2
        probes += 1
        if probes > 64:
            raise ScaleTooCoarseError(
                "generator exhausted before an admissible member was found")
    lo = max(start, hi - step // 2)
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(scale.member(mid)):
            hi = mid
        else:
            lo = mid + 1
    return hi


def build_z(s, m: int, scale: Scale, n_max: int) -> ZConstruction:
    """Run the recursion choosing r_{n+1} as the largest admissible
    generator member and g(n) as the smallest even integer in the
    admissible open interval.

    The admissibility of r_{n+1} requires r_{n+1}^p < r_n and an interval
    of length >= 3 (a length sufficient to contain an even integer).
    """
    s = Fraction(s)
    m = int(m)
    if not 0 <= s <= m:
        raise PackdimError("need 0 <= s <= m")
    if s == 0:
        return ZConstruction(s, m, n_max, "unit_cube")
    if s == m:
        return ZConstruction(s, m, n_max, "origin")
    p = s / m
    q = 1 - p
    b, a = q.numerator, q.denominator
    ps, pd = p.numerator, p.denominator

    if scale.generator is None:
        raise ScaleTooCoarseError("the construction needs a scale generator")
    r = [Fraction(scale.member(0))]
    G = [1]
    g: list[int] = []
    u: list[Fraction] = []
    idx = 0
    for n in range(n_max):
        Gn = G[n]
        Ga = Gn ** a
        rn = r[n]

        def admissible(v):
            v = Fraction(v)
            if not v ** ps < rn ** pd:   # r_{n+1}^p < r_n
                return False
            # interval length (2/(n+1)) / (G(n) v^{1-p}) >= 3
            return Fraction(2, n + 1) ** a >= Fraction(3) ** a * Ga * v ** b

        idx = _first_admissible_index(scale, idx + 1, admissible)
        v = Fraction(scale.member(idx))
        # smallest even integer strictly above the interval's lower end:
        # g > lower  <=>  g^a > T, solved by an exact integer a-th root
        vb = v ** b
        T = Fraction(n, n + 1) ** a / (Ga * vb)
        seed = _iroot(T.numerator // T.denominator, a)
        gn = max(2, (seed - seed % 2) - 2)

        def above(gg):
            return Fraction(gg) ** a * Ga * vb > Fraction(n, n + 1) ** a

        while not above(gn):
            gn += 2
        while gn - 2 >= 2 and above(gn - 2):
            gn -= 2
        r.append(v)
        g.append(gn)
        G.append(Gn * gn)
        u.append(gn * v)
    z = ZConstruction(s, m, n_max, "cantor", p=p, r=r, g=g, G=G, u=u)
    bad = z.verify_invariants()
    if bad:
        raise PackdimError("construction failed its own invariants: " + "; ".join(bad))
    return z


# ---------------------------------------------------------------------------
# exhaustion schedules


@dataclass
class ScheduleStage:
    label: str
    components: list  # DigitSet | LogSequenceSet

    def _component_counts(self, n: int) -> list[int]:
        return [c.covering_count(n) if isinstance(c, DigitSet)
                else c.covering_count(2.0 ** -n) for c in self.components]

    def covering_upper(self, n: int) -> int:
        """Upper oracle at dyadic scale 2^-n: sum of component coverings."""
        return sum(self._component_counts(n))

    def covering_lower(self, n: int) -> int:
        """Lower oracle: largest single component covering."""
        return max(self._component_counts(n))

    def scaling_rows(self, levels):
        """Upper-oracle rows at dyadic scales, combined in log space so
        digit-set counts beyond float range still contribute."""
        from .estimators import ScalingRow
        ln2 = math.log(2.0)
        rows = []
        for n in levels:
            logs = []
            for c in self.components:
                if isinstance(c, DigitSet):
                    logs.append(c.free_count(n) * ln2)
                else:
                    logs.append(math.log(c.covering_count(2.0 ** -n)))
            top = max(logs)
            lc = top + math.log(sum(math.exp(v - top) for v in logs))
            ld = -n * ln2
            rows.append(ScalingRow(
                math.exp(ld) if ld > -700 else 0.0,
                math.exp(lc) if lc < 700 else math.inf,
                "oracle", log_delta=ld, log_count=lc))
        return rows


@dataclass
class ExhaustionSchedule:
    stages: list

    def __post_init__(self):
        if not self.stages:
            raise PackdimError("a schedule needs at least one stage")


def exhaustion_schedule(digit_sets, log_cutoffs=None, kind="natural") -> ExhaustionSchedule:
    """Natural schedule for K0 union K1 union E_log: stage k keeps the
    digit sets whole and truncates the log set at cutoff N_k."""
    if kind != "natural":
        raise PackdimError("only the natural schedule kind is built in")
    stages = []
    if log_cutoffs:
        for k, N in enumerate(log_cutoffs):
            comps = list(digit_sets) + [LogSequenceSet(N)]
            stages.append(ScheduleStage(f"stage{k}(N={N})", comps))
    else:
        stages.append(ScheduleStage("stage0", list(digit_sets)))
    return ExhaustionSchedule(stages)
