"""Command-line harness: generate sets, run estimators, verification suites.

Commands: generate | estimate | verify | plotdata.
Exit codes: 0 success, 1 property violations, 2 configuration error,
3 exact-solver cap exceeded.

Randomness comes from numpy's Philox 4x64 counter-based generator keyed
by (seed, suite index, trial index), so every randomized suite is fully
reproducible from the seed alone.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    PackdimError,
    TooLargeForExactError,
    TooManyPointsError,
)
from .estimators import (
    ScalingReport,
    ScalingRow,
    homo1_check,
    homogeneity_certify,
    lbdim_estimate,
    report_to_csv,
    scaling_report,
    ubdim_estimate,
)
from .fractals import (
    DigitSet,
    LogSequenceSet,
    build_z,
    make_digit_blocks,
)
from .metric import (
    FiniteMetricSpace,
    product,
    read_point_cloud,
    write_point_cloud,
)
from .packing import (
    GaugeFunction,
    Scale,
    capacity,
    combine_product_packing,
    covering,
    lipschitz_image_check,
    pack_premeasure,
)
from .premeasure import random_monotone_table, verify_lemma_MI

SUITES = ("sandwich", "products", "rectangle", "lemma-mi", "z-invariants",
          "z-scaling", "homogeneity", "lipschitz")


def _rng(seed: int, suite: int = 0, trial: int = 0) -> np.random.Generator:
    # Philox keys are two 64-bit words: (seed, suite << 32 | trial)
    return np.random.Generator(
        np.random.Philox(key=[seed, (suite << 32) + trial]))


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(out, name: str, text: str) -> Path:
    path = Path(out) / name if out else Path(name)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _random_cloud(rng, n: int, dim: int) -> FiniteMetricSpace:
    return FiniteMetricSpace.from_points(rng.random((n, dim)), label="cloud")


def _scales_for(space: FiniteMetricSpace, rng, k: int) -> list[float]:
    """k scales drawn from the quantiles of the pairwise distances, jittered
    to dodge exact ties."""
    m = space.matrix()
    ds = np.sort(m[np.triu_indices(space.n, 1)])
    qs = np.linspace(0.08, 0.85, k)
    vals = np.quantile(ds, qs) * (1.0 + 0.01 * rng.random(k))
    return sorted(set(float(v) for v in vals if v > 0), reverse=True)


# ---------------------------------------------------------------------------
# verify suites (each returns a canonical report dict)


def suite_sandwich(seed: int, trials: int, cap: int) -> dict:
    violations = []
    for t in range(trials):
        rng = _rng(seed, 0, t)
        n = int(rng.integers(5, 23))
        dim = int(rng.integers(1, 4))
        space = _random_cloud(rng, n, dim)
        for d in _scales_for(space, rng, 8):
            lo = capacity(space, 2 * d, mode="exact", cap=cap).count
            mid = capacity(space, d, mode="exact", cap=cap).count
            hi = covering(space, d, mode="exact", cap=cap)
            if not lo <= mid <= hi:
                violations.append({"trial": t, "delta": d,
                                   "chain": [lo, mid, hi]})
    return {"suite": "sandwich", "trials": trials, "violations": violations}


def suite_products(seed: int, trials: int, cap: int) -> dict:
    violations = []
    for t in range(trials):
        rng = _rng(seed, 1, t)
        nx, ny = (int(v) for v in rng.integers(3, 7, size=2))
        X = _random_cloud(rng, nx, int(rng.integers(1, 3)))
        Y = _random_cloud(rng, ny, int(rng.integers(1, 3)))
        P = product(X, Y)
        for r in _scales_for(P, rng, 6):
            cp = capacity(P, r, mode="exact", cap=cap).count
            np_ = covering(P, r, mode="exact", cap=cap)
            nx_r = covering(X, r, mode="exact", cap=cap)
            cy = capacity(Y, r, mode="exact", cap=cap).count
            ny_r = covering(Y, r, mode="exact", cap=cap)
            if cp > nx_r * cy:
                violations.append({"trial": t, "r": r, "kind": "capacity",
                                   "lhs": cp, "rhs": nx_r * cy})
            if np_ > nx_r * ny_r:
                violations.append({"trial": t, "r": r, "kind": "covering",
                                   "lhs": np_, "rhs": nx_r * ny_r})
    return {"suite": "products", "trials": trials, "violations": violations}


def suite_rectangle(seed: int, trials: int, cap: int) -> dict:
    g = GaugeFunction.power(0.5)
    h = GaugeFunction.power(0.7)
    gh = g.pointwise_product(h)
    violations = []
    for t in range(trials):
        rng = _rng(seed, 2, t)
        nx, ny = (int(v) for v in rng.integers(3, 7, size=2))
        X = _random_cloud(rng, nx, 1)
        Y = _random_cloud(rng, ny, 1)
        P = product(X, Y)
        anchor = 0.1 * (1 + rng.random())
        scale = Scale.geometric(Fraction(anchor).limit_denominator(256),
                                Fraction(1, 2), 4)
        delta = float(scale.values[0])
        lhs, _ = pack_premeasure(P, gh, scale, delta, mode="exact", cap=cap)
        rx, pi = pack_premeasure(X, h, scale, delta, mode="exact", cap=cap)
        ry = min(capacity(Y, float(r), mode="exact", cap=cap).count
                 * g(float(r)) for r in scale.values)
        if lhs < rx * ry - 1e-9:
            violations.append({"trial": t, "lhs": lhs, "rhs": rx * ry})
        # the combiner must always emit a valid product packing
        if pi.entries:
            secs = {i: capacity(Y, float(r), mode="exact", cap=cap).witness
                    for i, r in pi.entries}
            try:
                combine_product_packing(P, pi, secs)
            except PackdimError as exc:
                violations.append({"trial": t, "combiner": str(exc)})
    return {"suite": "rectangle", "trials": trials, "violations": violations}


def suite_lemma_mi(seed: int, trials: int, cap: int) -> dict:
    violations = []
    for t in range(trials):
        rng = _rng(seed, 3, t)
        n = int(rng.integers(2, 5))
        space = _random_cloud(rng, n, 1)
        tau = random_monotone_table(space, rng)
        rep = verify_lemma_MI(tau)
        if not rep["ok"]:
            violations.append({"trial": t, "violations": rep["violations"]})
    return {"suite": "lemma-mi", "trials": trials, "violations": violations}


_Z_CASES = ((Fraction(1, 2), 1), (Fraction(1, 2), 2), (Fraction(1), 2))


def suite_z_invariants(seed: int, trials: int, cap: int, depth: int = 8) -> dict:
    violations = []
    for s, m in _Z_CASES:
        z = build_z(s, m, Scale.dyadic(4), depth)
        for msg in z.verify_invariants():
            violations.append({"s": str(s), "m": m, "violation": msg})
        for n in range(1, depth):
            try:
                got = z.covering_at_u(n)
            except PackdimError as exc:
                violations.append({"s": str(s), "m": m, "level": n,
                                   "violation": str(exc)})
                continue
            if got != z.G[n]:
                violations.append({"s": str(s), "m": m, "level": n,
                                   "violation": f"N_u={got} != G={z.G[n]}"})
    return {"suite": "z-invariants", "trials": len(_Z_CASES),
            "violations": violations}


def _log_frac(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def suite_z_scaling(seed: int, trials: int, cap: int, depth: int = 9) -> dict:
    """Finite-depth scaling sandwich for (s, m) = (1/2, 1).

    Along sampled radii in [r_{n*}, u_1] the closed-form covering bound
    times r^{1-p} must stay below theta_1 (1 + (u_1/r_1)^{1-p}); at
    r = u_{n*} the value G(n*) u_{n*}^{1-p} must land in its band.
    All products are evaluated in log space to survive tiny radii.
    """
    z = build_z(Fraction(1, 2), 1, Scale.dyadic(4), depth)
    nstar = depth - 1
    q = 1 - z.p  # = 1/2
    violations = []
    bound = (1 + 1.0 / 1) * (1 + math.exp(float(q) * (_log_frac(z.u[1])
                                                      - _log_frac(z.r[1]))))
    samples = []
    for n in range(1, nstar + 1):
        samples.append(("r", n, z.r[n]))
        if n <= nstar - 1:
            samples.append(("u", n, z.u[n]))
        mid = (z.r[n] + (z.u[n] if n < nstar else z.r[nstar])) / 2
        samples.append(("mid", n, mid))
    for tag, n, r in samples:
        if not z.r[nstar] <= r <= z.u[1]:
            continue
        info = z.covering_bound(r)
        val = math.exp(math.log(info["ny_bound"]) + float(q) * _log_frac(r))
        if val > bound * (1 + 1e-9):
            violations.append({"at": f"{tag}_{n}", "value": val,
                               "bound": bound})
    vstar = math.exp(math.log(z.G[nstar]) + float(q) * _log_frac(z.u[nstar]))
    lo = (1 - 1.0 / nstar) * math.exp(
        float(q) * (_log_frac(z.u[nstar]) - _log_frac(z.r[nstar])))
    hi = 1 + 1.0 / nstar
    if not lo * (1 - 1e-9) <= vstar <= hi * (1 + 1e-9):
        violations.append({"at": f"u_{nstar}", "value": vstar,
                           "band": [lo, hi]})
    return {"suite": "z-scaling", "trials": len(samples),
            "violations": violations}


def k0_k1_default(depth: int | None = None) -> tuple[DigitSet, DigitSet]:
    blocks = make_digit_blocks()
    return (DigitSet(blocks, "k0", depth), DigitSet(blocks, "k1", depth))


def suite_homogeneity(seed: int, trials: int, cap: int) -> dict:
    """Certify the depth-16 digit-set discretization and spot-check the
    doubling-style capacity comparison plus the product capacity bound at
    the nested-construction scales."""
    k0, _ = k0_k1_default()
    X = k0.discretize(16)
    radii = [2.0 ** -k for k in range(1, 17)]
    cert = homogeneity_certify(X, radii, m=1, cap=cap)
    Q = cert["Q"]
    violations = [{"pair": v} for v in homo1_check(X, Q, 1, radii, cap=cap)]

    z = build_z(Fraction(1, 2), 1, Scale.dyadic(4), 8)
    level = max(n for n in range(len(z.G)) if z.G[n] <= 256)
    Yd = z.discretize_y(level)
    s = float(z.s)
    checked = 0
    for n in range(1, z.n_max + 1):
        rn = float(z.r[n])
        if rn == 0.0:
            break
        lhs = covering(X, rn) * capacity(Yd, rn).count * rn
        rhs = 2 * Q * capacity(X, rn).count * rn ** s * (1 + 1.0 / n)
        checked += 1
        if lhs > rhs * (1 + 1e-9):
            violations.append({"scale": rn, "lhs": lhs, "rhs": rhs})
    return {"suite": "homogeneity", "trials": checked,
            "violations": violations, "Q": Q}


def suite_lipschitz(seed: int, trials: int, cap: int) -> dict:
    violations = []
    for t in range(trials):
        rng = _rng(seed, 7, t)
        n = int(rng.integers(5, 15))
        X = _random_cloud(rng, n, 1)
        c = float(0.25 + rng.random())
        Y = FiniteMetricSpace.from_points(c * X.embedding, label="image")
        fmap = {i: i for i in range(n)}
        scales = _scales_for(X, rng, 4)
        try:
            lipschitz_image_check(X, Y, fmap, c, 0.5, scales)
        except PackdimError as exc:
            violations.append({"trial": t, "error": str(exc)})
    return {"suite": "lipschitz", "trials": trials, "violations": violations}


_SUITE_FNS = {
    "sandwich": (suite_sandwich, 100),
    "products": (suite_products, 50),
    "rectangle": (suite_rectangle, 50),
    "lemma-mi": (suite_lemma_mi, 1000),
    "z-invariants": (suite_z_invariants, 1),
    "z-scaling": (suite_z_scaling, 1),
    "homogeneity": (suite_homogeneity, 1),
    "lipschitz": (suite_lipschitz, 50),
}


def run_suite(name: str, seed: int, trials: int | None, cap: int) -> dict:
    fn, default_trials = _SUITE_FNS[name]
    return fn(seed, trials if trials is not None else default_trials, cap)


def run_battery(seed: int, cap: int) -> list[dict]:
    return [run_suite(name, seed, None, cap) for name in SUITES]


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    kind = args.kind
    out = args.out
    if kind in ("k0", "k1"):
        blocks = make_digit_blocks()
        ds = DigitSet(blocks, kind)
        space = ds.discretize(args.depth)
        path = _write_cloud(out, f"{kind}_depth{args.depth}.csv", space)
        print(f"{kind} depth {args.depth}: {space.n} points -> {path}")
    elif kind == "logset":
        ls = LogSequenceSet(args.cutoff)
        space = ls.discretize()
        path = _write_cloud(out, f"logset_{args.cutoff}.csv", space)
        print(f"logset N={args.cutoff}: {space.n} points -> {path}")
    elif kind == "z":
        z = build_z(Fraction(args.s).limit_denominator(10 ** 6), args.m,
                    Scale.dyadic(4), args.depth)
        bad = z.verify_invariants()
        status = "OK" if not bad else "; ".join(bad)
        path = _write(out, f"z_s{args.s}_m{args.m}_d{args.depth}.json",
                      _dump({"manifest": z.manifest(), "checks": status}))
        print(f"z construction (s={args.s}, m={args.m}): checks {status} -> {path}")
        return 0 if not bad else 1
    elif kind == "random-cloud":
        rng = _rng(args.seed, 99)
        space = _random_cloud(rng, args.n, args.dim)
        path = _write_cloud(out, f"cloud_n{args.n}_d{args.dim}_s{args.seed}.csv",
                            space)
        print(f"random cloud: {space.n} points dim {args.dim} -> {path}")
    return 0


def _write_cloud(out, name, space) -> Path:
    path = Path(out) / name if out else Path(name)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_point_cloud(path, space)
    return path


def _parse_scales(spec: str) -> list[float]:
    if spec.startswith("dyadic:"):
        k = int(spec.split(":")[1])
        return [2.0 ** -(i + 1) for i in range(k)]
    return [float(v) for v in spec.split(",")]


def cmd_estimate(args) -> int:
    deltas = _parse_scales(args.scales)
    if args.oracle:
        if args.oracle in ("k0", "k1"):
            blocks = make_digit_blocks()
            ds = DigitSet(blocks, args.oracle)
            rows = [ScalingRow(2.0 ** -n, float(ds.covering_count(n)), "oracle")
                    for n in (int(round(-math.log2(d))) for d in deltas)]
            report = ScalingReport(args.oracle, rows)
        elif args.oracle == "logset":
            ls = LogSequenceSet(args.cutoff)
            report = scaling_report(deltas, ls.covering_estimate,
                                    source="oracle", label="logset")
        else:
            raise PackdimError(f"unknown oracle {args.oracle!r}")
    else:
        space = read_point_cloud(args.input, label=Path(args.input).stem)
        report = scaling_report(
            deltas, lambda d: covering(space, d, cap=args.cap_exact),
            source="exact", label=space.label)
    sub = [float(v) for v in args.subsequence.split(",")] if args.subsequence else None
    est_fn = lbdim_estimate if args.kind == "lb" else ubdim_estimate
    est = est_fn(report, window=args.window, subsequence=sub)
    base = args.label or report.label or "report"
    csv_path = Path(args.out or ".") / f"{base}_report.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    report_to_csv(report, csv_path)
    est_json = {"kind": args.kind, "value": est["estimate"],
                "window": est["window"], "subsequence": sub,
                "source_quality": est["quality"]}
    jpath = _write(args.out, f"{base}_estimate.json", _dump(est_json))
    if args.fig:
        _render_report_figure([report], Path(args.out or ".") / f"{base}.png")
    print(f"{args.kind}dim estimate {est['estimate']:.6f} "
          f"({est['quality']}) -> {jpath}")
    return 0


def cmd_verify(args) -> int:
    if args.suite == "all":
        reports = run_battery(args.seed, args.cap_exact)
    else:
        reports = [run_suite(args.suite, args.seed, args.trials,
                             args.cap_exact)]
    text = _dump(reports)
    if args.out:
        _write(args.out, f"verify_{args.suite}.json", text)
    else:
        sys.stdout.write(text)
    total = sum(len(r["violations"]) for r in reports)
    for r in reports:
        print(f"{r['suite']}: {len(r['violations'])} violations "
              f"in {r['trials']} trials", file=sys.stderr)
    return 0 if total == 0 else 1


def _render_report_figure(reports, path: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for rep in reports:
        xs = [abs(math.log(r.delta)) for r in rep.rows]
        ys = [math.log(r.count) for r in rep.rows]
        ax.plot(xs, ys, marker="o", label=rep.label or "series")
    ax.set_xlabel("log 1/delta")
    ax.set_ylabel("log count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_plotdata(args) -> int:
    from .estimators import report_from_csv

    reports = []
    for p in args.reports:
        if not Path(p).exists():
            print(f"unreadable report: {p}", file=sys.stderr)
            return 2
        reports.append(report_from_csv(p, label=Path(p).stem))
    out_csv = Path(args.out or ".") / "plotdata.csv"
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(out_csv, "w", newline="") as f:
        f.write("series,delta,log_inv_delta,log_count,slope\n")
        for rep in reports:
            for r in rep.rows:
                f.write(f"{rep.label},{r.delta!r},{abs(math.log(r.delta))!r},"
                        f"{math.log(r.count)!r},{r.slope!r}\n")
    if reports:
        _render_report_figure(reports, out_csv.with_suffix(".png"))
    print(f"plot data -> {out_csv}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="packdim")
    top.add_argument("--config", help="JSON file whose keys mirror the flags")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None)
        p.add_argument("--cap-exact", dest="cap_exact", type=int, default=40)

    g = sub.add_parser("generate", help="emit point clouds / manifests")
    g.add_argument("kind", choices=("k0", "k1", "logset", "z", "random-cloud"))
    g.add_argument("--depth", type=int, default=12)
    g.add_argument("--cutoff", type=int, default=10_000)
    g.add_argument("--s", type=float, default=0.5)
    g.add_argument("--m", type=int, default=1)
    g.add_argument("--n", type=int, default=30)
    g.add_argument("--dim", type=int, default=2)
    common(g)
    g.set_defaults(fn=cmd_generate)

    e = sub.add_parser("estimate", help="scaling report + dimension estimate")
    e.add_argument("--input", help="point-cloud CSV")
    e.add_argument("--oracle", choices=("k0", "k1", "logset"))
    e.add_argument("--kind", choices=("lb", "ub"), default="lb")
    e.add_argument("--scales", default="dyadic:12",
                   help="'dyadic:K' or comma-separated deltas")
    e.add_argument("--window", type=int, default=None)
    e.add_argument("--subsequence", default=None)
    e.add_argument("--cutoff", type=int, default=10_000)
    e.add_argument("--label", default=None)
    e.add_argument("--fig", action="store_true",
                   help="render a log-log figure beside the CSV")
    common(e)
    e.set_defaults(fn=cmd_estimate)

    v = sub.add_parser("verify", help="run a property suite (or 'all')")
    v.add_argument("suite", choices=SUITES + ("all",))
    v.add_argument("--trials", type=int, default=None)
    common(v)
    v.set_defaults(fn=cmd_verify)

    p = sub.add_parser("plotdata", help="tidy CSV + figure from report CSVs")
    p.add_argument("reports", nargs="*")
    common(p)
    p.set_defaults(fn=cmd_plotdata)
    return top


def _apply_config(args: argparse.Namespace):
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        for key, val in data.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr):
                setattr(args, attr, val)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        if args.command == "estimate" and not (args.input or args.oracle):
            print("estimate needs --input or --oracle", file=sys.stderr)
            return 2
        return args.fn(args)
    except (TooLargeForExactError, TooManyPointsError) as exc:
        print(f"cap exceeded: {exc} (rerun with --cap-exact or greedy mode)",
              file=sys.stderr)
        return 3
    except (PackdimError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
