"""Finite-scale dimension estimators over scaling reports.

A scaling report is a table of (delta, count) rows with a provenance tag
per row: 'oracle' (symbolic closed form), 'exact' (certified optimizer)
or 'greedy' (bound only).  Estimators turn slopes log(count)/|log delta|
into liminf/limsup proxies over a tail window, optionally restricted to
a subsequence of scales.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

from .errors import InsufficientDataError, PackdimError

_QUALITY_ORDER = {"oracle": 0, "exact": 1, "greedy": 2}
MIN_ROWS = 4


@dataclass(frozen=True)
class ScalingRow:
    """One (delta, count) sample.

    Scales too small (or counts too large) for double precision can be
    given directly in natural-log form via log_delta / log_count; the
    plain fields then hold the (possibly underflowed) float images.
    """

    delta: float
    count: float
    source: str = "exact"
    log_delta: float | None = None
    log_count: float | None = None

    def __post_init__(self):
        if self.log_delta is None:
            if self.delta <= 0 or self.delta >= 1:
                raise PackdimError("scales must lie in (0, 1): slope at delta "
                                   f"= {self.delta} is undefined")
            object.__setattr__(self, "log_delta", math.log(self.delta))
        elif self.log_delta >= 0:
            raise PackdimError("log_delta must be negative (delta < 1)")
        if self.log_count is None:
            if self.count < 1:
                raise PackdimError("counts must be >= 1")
            object.__setattr__(self, "log_count", math.log(self.count))
        elif self.log_count < 0:
            raise PackdimError("log_count must be >= 0 (count >= 1)")
        if self.source not in _QUALITY_ORDER:
            raise PackdimError(f"unknown source tag {self.source!r}")

    @property
    def slope(self) -> float:
        return self.log_count / abs(self.log_delta)


@dataclass
class ScalingReport:
    label: str
    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: -r.log_delta)
        deltas = [r.log_delta for r in self.rows]
        if len(set(deltas)) != len(deltas):
            raise PackdimError("duplicate scales in a scaling report")

    @property
    def quality(self) -> str:
        """Worst provenance across rows ('oracle' beats 'exact' beats 'greedy')."""
        if not self.rows:
            return "exact"
        return max((r.source for r in self.rows), key=_QUALITY_ORDER.get)

    def slopes(self) -> list[float]:
        return [r.slope for r in self.rows]


def scaling_report(deltas, count_fn, source: str = "exact",
                   label: str = "") -> ScalingReport:
    """Evaluate a count oracle/optimizer on a scale list."""
    rows = [ScalingRow(float(d), float(count_fn(d)), source) for d in deltas]
    return ScalingReport(label, rows)


def _tail(report: ScalingReport, window=None, subsequence=None) -> list[ScalingRow]:
    rows = report.rows
    if subsequence is not None:
        wanted = {float(d) for d in subsequence}
        rows = [r for r in rows if r.delta in wanted]
    if len(rows) < MIN_ROWS:
        raise InsufficientDataError(
            f"need at least {MIN_ROWS} usable rows, got {len(rows)}")
    k = window if window is not None else max(MIN_ROWS, len(rows) // 2)
    return rows[-k:]


def lbdim_estimate(report: ScalingReport, window=None, subsequence=None) -> dict:
    """Finite-scale proxy for the liminf slope (lower box dimension)."""
    tail = _tail(report, window, subsequence)
    est = min(r.slope for r in tail)
    return {"estimate": est, "window": len(tail),
            "deltas": [r.delta for r in tail],
            "slopes": [r.slope for r in tail], "quality": report.quality}


def ubdim_estimate(report: ScalingReport, window=None, subsequence=None) -> dict:
    """Finite-scale proxy for the limsup slope (upper box dimension)."""
    tail = _tail(report, window, subsequence)
    est = max(r.slope for r in tail)
    return {"estimate": est, "window": len(tail),
            "deltas": [r.delta for r in tail],
            "slopes": [r.slope for r in tail], "quality": report.quality}


def dpdim_schedule_estimate(reports, window=None, subsequence=None) -> dict:
    """Exhaustion-schedule estimate: sup over stages of the stage liminf
    slope.  This upper-bounds the schedule-infimum quantity (any finer
    schedule can only lower it).  When a subsequence of scales is given,
    a lower companion is reported: the smallest subsequence slope across
    all stages (every stage must cover the liminf along that subsequence).
    """
    if not reports:
        raise InsufficientDataError("schedule estimate needs at least one stage")
    per_stage = [lbdim_estimate(rep, window) for rep in reports]
    best = max(range(len(per_stage)), key=lambda i: per_stage[i]["estimate"])
    quality = max((rep.quality for rep in reports), key=_QUALITY_ORDER.get)
    out = {"estimate": per_stage[best]["estimate"], "arg_stage": best,
           "stages": per_stage, "quality": quality, "bound_side": "upper"}
    if subsequence is not None:
        out["lower_companion"] = min(
            lbdim_estimate(rep, window=len(subsequence), subsequence=subsequence)
            ["estimate"] for rep in reports)
    return out


# ---------------------------------------------------------------------------
# homogeneity


def homogeneity_certify(space, radii, m: int, cap: int = 40) -> dict:
    """Smallest Q with C_r(E) <= Q (diam E / r)^m over the sampled radii.

    Returns the certificate {Q, arg_r, rows}.  Radii above diam E are
    skipped (the comparison only makes sense up to the diameter); a
    certificate over an empty sample set is the vacuous Q = 0.
    """
    from .packing import capacity
    d = space.diam()
    rows = []
    best = 0.0
    arg = None
    for r in radii:
        r = float(r)
        if not 0 < r <= d:
            continue
        c = capacity(space, r, cap=cap)
        q = c.count * (r / d) ** m
        rows.append({"r": r, "capacity": c.count, "q": q, "method": c.method})
        if q > best:
            best, arg = q, r
    return {"Q": best, "arg_r": arg, "m": m, "diam": d, "rows": rows}


def homo1_check(space, Q: float, m: int, radii, cap: int = 40) -> list:
    """Check C_r(X) r^m <= 2^m Q C_t(X) t^m for all sampled r <= t.

    Returns violation records (empty when the bound holds).
    """
    from .packing import capacity
    rs = sorted(float(r) for r in radii)
    caps = {r: capacity(space, r, cap=cap).count for r in rs}
    bad = []
    for i, r in enumerate(rs):
        for t in rs[i:]:
            lhs = caps[r] * r ** m
            rhs = (2 ** m) * Q * caps[t] * t ** m
            if lhs > rhs * (1 + 1e-12):
                bad.append({"r": r, "t": t, "lhs": lhs, "rhs": rhs})
    return bad


# ---------------------------------------------------------------------------
# export


def report_to_csv(report: ScalingReport, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["delta", "count", "slope", "source"])
        for r in report.rows:
            w.writerow([repr(r.delta), repr(r.count), repr(r.slope), r.source])


def report_from_csv(path, label: str = "") -> ScalingReport:
    with open(path, newline="") as f:
        rd = csv.reader(f)
        next(rd)
        rows = [ScalingRow(float(a), float(b), s) for a, b, _, s in rd]
    return ScalingReport(label, rows)


def report_to_json(report: ScalingReport) -> str:
    return json.dumps({
        "label": report.label, "quality": report.quality,
        "rows": [{"delta": r.delta, "count": r.count,
                  "slope": r.slope, "source": r.source} for r in report.rows],
    })
