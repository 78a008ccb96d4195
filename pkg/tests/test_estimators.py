import math

import numpy as np
import pytest

from packdim import (
    DigitSet,
    FiniteMetricSpace,
    covering,
    InsufficientDataError,
    PackdimError,
    ScalingReport,
    ScalingRow,
    dpdim_schedule_estimate,
    exhaustion_schedule,
    homo1_check,
    homogeneity_certify,
    lbdim_estimate,
    make_digit_blocks,
    report_from_csv,
    report_to_csv,
    scaling_report,
    ubdim_estimate,
)


def dyadic_report(slope, ks, source="exact"):
    rows = [ScalingRow(2.0 ** -k, 2.0 ** (slope * k), source) for k in ks]
    return ScalingReport("", rows)


def grid(n):
    return FiniteMetricSpace.from_points([i / n for i in range(n)])


class TestScalingRow:
    def test_delta_must_be_below_one(self):
        with pytest.raises(PackdimError):
            ScalingRow(1.0, 4, "exact")
        with pytest.raises(PackdimError):
            ScalingRow(2.0, 4, "exact")

    def test_count_must_be_at_least_one(self):
        with pytest.raises(PackdimError):
            ScalingRow(0.5, 0.5, "exact")

    def test_source_vocabulary(self):
        with pytest.raises(PackdimError):
            ScalingRow(0.5, 2, "guess")

    def test_slope(self):
        assert ScalingRow(0.25, 16, "exact").slope == pytest.approx(2.0)

    def test_log_space_row(self):
        row = ScalingRow(0.0, 0.0, "oracle",
                         log_delta=-3000 * math.log(2),
                         log_count=1500 * math.log(2))
        assert row.slope == pytest.approx(0.5)


class TestScalingReport:
    def test_sorted_and_deduped(self):
        rows = [ScalingRow(0.5, 2, "exact"), ScalingRow(0.25, 4, "exact")]
        rep = ScalingReport("", list(reversed(rows)))
        assert [r.delta for r in rep.rows] == [0.5, 0.25]
        with pytest.raises(PackdimError):
            ScalingReport("", rows + [ScalingRow(0.5, 3, "exact")])

    def test_quality_is_worst_source(self):
        rep = ScalingReport("", [ScalingRow(0.5, 2, "exact"),
                                 ScalingRow(0.25, 4, "greedy")])
        assert rep.quality == "greedy"

    def test_factory_from_count_fn(self):
        rep = scaling_report([0.5, 0.25, 0.125], lambda d: round(1 / d),
                             "exact", label="grid")
        assert rep.label == "grid"
        assert [r.count for r in rep.rows] == [2, 4, 8]


class TestDimensionEstimates:
    def test_insufficient_rows(self):
        rep = dyadic_report(1.0, range(1, 4))
        with pytest.raises(InsufficientDataError):
            lbdim_estimate(rep)

    def test_uniform_grid_both_sides_equal_one(self):
        sp = grid(1024)
        deltas = [2.0 ** -k for k in range(2, 11)]
        rep = scaling_report(deltas, lambda d: 1 << round(math.log2(1 / d)),
                             "oracle")
        for d, row in zip(deltas, rep.rows):
            assert covering(sp, d) == row.count
        assert lbdim_estimate(rep)["estimate"] == pytest.approx(1.0)
        assert ubdim_estimate(rep)["estimate"] == pytest.approx(1.0)

    def test_lb_at_most_ub(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            slopes = rng.random(8) * 0.9 + 0.05
            rows = []
            logc = 0.0
            for k, s in enumerate(slopes, start=1):
                logc += s * math.log(2)
                rows.append(ScalingRow(2.0 ** -k, math.exp(logc), "exact"))
            rep = ScalingReport("", rows)
            assert lbdim_estimate(rep)["estimate"] <= \
                ubdim_estimate(rep)["estimate"] + 1e-12

    def test_estimates_within_slope_range(self):
        rep = dyadic_report(0.6, range(1, 9))
        lo = lbdim_estimate(rep)
        hi = ubdim_estimate(rep)
        assert lo["estimate"] == pytest.approx(0.6)
        assert hi["estimate"] == pytest.approx(0.6)
        assert lo["quality"] == "exact"

    def test_window_selection(self):
        # growth rate 1.0 early, 0.25 late: a tail window sees the mixed
        # slope settle toward 0.5 while the early rows sit near 1.0
        rows = [ScalingRow(2.0 ** -k, 2.0 ** k, "exact") for k in range(1, 5)]
        rows += [ScalingRow(2.0 ** -k, 2.0 ** (4 + 0.25 * (k - 4)), "exact")
                 for k in range(5, 13)]
        rep = ScalingReport("", rows)
        est = lbdim_estimate(rep, window=4)
        assert est["estimate"] == pytest.approx(0.5)
        assert est["window"] == 4

    def test_digit_oracle_slopes(self):
        blocks = make_digit_blocks()
        k0 = DigitSet(blocks, "k0")
        rep = ScalingReport("k0", k0.scaling_rows(list(range(4, 16))))
        for row, n in zip(rep.rows, range(4, 16)):
            assert row.slope == pytest.approx(k0.free_count(n) / n, rel=1e-12)

    def test_forced_run_slope_dips(self):
        blocks = make_digit_blocks()
        k0 = DigitSet(blocks, "k0")
        ends = k0.forced_run_ends(200000)
        rep = ScalingReport("k0", k0.scaling_rows(ends))
        est = lbdim_estimate(rep)
        assert est["estimate"] <= 0.15


class TestScheduleEstimate:
    def test_single_stage_matches_lbdim(self):
        rep = dyadic_report(0.7, range(1, 9))
        single = dpdim_schedule_estimate([rep])
        assert single["estimate"] == lbdim_estimate(rep)["estimate"]
        assert single["bound_side"] == "upper"

    def test_sup_over_stages(self):
        reps = [dyadic_report(s, range(1, 9)) for s in (0.3, 0.8, 0.5)]
        est = dpdim_schedule_estimate(reps)
        assert est["estimate"] == pytest.approx(0.8)
        assert est["arg_stage"] == 1

    def test_union_schedule_near_half(self):
        blocks = make_digit_blocks()
        k0 = DigitSet(blocks, "k0")
        k1 = DigitSet(blocks, "k1")
        sched = exhaustion_schedule([k0, k1], log_cutoffs=[1000])
        levels = blocks.f_subsequence(1000)
        reports = [ScalingReport(st.label, st.scaling_rows(levels))
                   for st in sched.stages]
        est = dpdim_schedule_estimate(reports)
        assert 0.45 <= est["estimate"] <= 0.7

    def test_subsequence_companion(self):
        rows = [ScalingRow(2.0 ** -k, 2.0 ** (0.5 * k), "exact")
                for k in range(1, 13)]
        rep = ScalingReport("", rows)
        sub = [2.0 ** -k for k in (2, 4, 6, 8)]
        est = dpdim_schedule_estimate([rep], subsequence=sub)
        assert est["lower_companion"] == pytest.approx(0.5)


class TestHomogeneity:
    def test_grid_certificate(self):
        sp = grid(64)
        deltas = [2.0 ** -k for k in range(1, 7)]
        cert = homogeneity_certify(sp, deltas, m=1)
        assert 0.5 <= cert["Q"] <= 2.0
        assert cert["arg_r"] in deltas

    def test_singleton_vacuous(self):
        sp = FiniteMetricSpace.from_points([0.0])
        cert = homogeneity_certify(sp, [0.5, 0.25], m=1)
        assert cert["Q"] == 0.0

    def test_homo1_on_grid(self):
        sp = grid(64)
        deltas = [2.0 ** -k for k in range(1, 7)]
        cert = homogeneity_certify(sp, deltas, m=1)
        violations = homo1_check(sp, cert["Q"], 1, deltas)
        assert violations == []


class TestReportIO:
    def test_csv_roundtrip(self, tmp_path):
        rep = dyadic_report(0.5, range(1, 7), source="greedy")
        path = tmp_path / "rep.csv"
        report_to_csv(rep, path)
        text = path.read_text().splitlines()
        assert text[0] == "delta,count,slope,source"
        back = report_from_csv(path)
        assert back.quality == "greedy"
        assert [r.count for r in back.rows] == [r.count for r in rep.rows]
        for a, b in zip(back.rows, rep.rows):
            assert a.slope == pytest.approx(b.slope)
