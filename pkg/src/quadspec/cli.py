"""Command-line surface: classify / analyze / verify with JSON reports.

Exit-code contract: 0 success (all criteria pass), 2 input or validation
error, 3 infrastructure error (solver failure, unusable spec for a suite),
4 verification suite ran but a criterion failed.  Reports contain no
timestamps, so identical commands with identical seeds produce byte-identical
files; the append-only JSON-lines run store carries the timestamped records.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .density import (
    MASS_TOLERANCE,
    DensityCurve,
    InsufficientPointsError,
    MassDeficitError,
    compute_density,
    fit_edge_exponent,
    quantiles,
    write_density_csv,
)
from .edges import compute_edges
from .lemmas import entrywise_real_part_violations, quad_stability_violations
from .mde import SingularAError, WignerSquareUnsupportedError, solve_m_delta, stability_spectrum
from .model import SpecError, classify_polynomial, load_spec, spec_hash_payload
from .scalar import NoConvergenceError, solve_m
from .sim import DISTRIBUTIONS, GAUSSIAN_COMPLEX, EnsembleConfig, simulate_run

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFRA = 3
EXIT_CRITERIA = 4

SUITES = ("density", "norm", "deloc", "rigidity", "stability", "lemmas")

KS_THRESHOLD = 0.05
NORM_SLOPE_RANGE = (-0.85, -0.50)
STABILITY_SLOPE_RANGE = (0.45, 0.55)
DE_RESIDUAL_THRESHOLD = 1e-9
TRIAL_PASS_FRACTION = 0.9
QUAD_STAB_SAMPLES = 100_000
HAT_A_SAMPLES = 1_000


@dataclass
class ComparisonReport:
    """Comparison between analytic predictions and simulation for one suite."""

    suite: str
    spec_hash: str | None
    seed: int
    config: dict
    ks_distance: float | None = None
    norm_errors: list | None = None
    norm_scaling_slope: float | None = None
    edge_exponent_left: float | None = None
    edge_exponent_right: float | None = None
    values: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    pass_flags: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def spec_digest(spec) -> str:
    return hashlib.sha256(spec_hash_payload(spec).encode()).hexdigest()


def compare_ks(empirical, curve: DensityCurve) -> float:
    """Kolmogorov distance between an empirical sample and the curve's CDF."""
    x = np.sort(np.asarray(empirical, dtype=float))
    if len(x) == 0:
        raise ValueError("empirical sample is empty")
    if abs(curve.mass - 1.0) > MASS_TOLERANCE:
        raise MassDeficitError(f"curve mass {curve.mass} deviates from 1 beyond {MASS_TOLERANCE}")
    n = len(x)
    F = curve.cdf_at(x) / curve.mass
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.max(upper - F), np.max(F - lower)))


def _pass_count_needed(trials: int) -> int:
    return int(np.ceil(TRIAL_PASS_FRACTION * trials))


def _analysis(spec, n_grid: int):
    classification = classify_polynomial(spec)
    edges = compute_edges(spec, classification)
    curve = compute_density(spec, edges, n_grid)
    return classification, edges, curve


def run_suite_lemmas(seed: int) -> ComparisonReport:
    report = ComparisonReport(suite="lemmas", spec_hash=None, seed=seed, config={})
    v_quad = quad_stability_violations(QUAD_STAB_SAMPLES, seed=seed)
    v_hat = entrywise_real_part_violations(HAT_A_SAMPLES, seed=seed)
    report.values = {
        "quad_stability_samples": QUAD_STAB_SAMPLES,
        "quad_stability_violations": v_quad,
        "entrywise_real_part_samples": HAT_A_SAMPLES,
        "entrywise_real_part_violations": v_hat,
    }
    report.thresholds = {"violations": 0}
    report.pass_flags = {"quad_stability": v_quad == 0, "entrywise_real_part": v_hat == 0}
    return report


def run_suite_density(spec, n, trials, seed, dist, n_grid, threads) -> ComparisonReport:
    _, edges, curve = _analysis(spec, n_grid)
    cfg = EnsembleConfig(N=n, dist=dist, seed=seed, trials=trials)
    result = simulate_run(spec, cfg, threads=threads)
    ks = compare_ks(result.pooled, curve)
    report = ComparisonReport(
        suite="density",
        spec_hash=spec_digest(spec),
        seed=seed,
        config={"N": n, "trials": trials, "dist": dist, "n_grid": n_grid},
        ks_distance=ks,
    )
    try:
        report.edge_exponent_left = fit_edge_exponent(curve, "left")
        report.edge_exponent_right = fit_edge_exponent(curve, "right")
    except InsufficientPointsError:
        pass
    report.values = {"mass": curve.mass, "tau_star": edges.tau_star}
    report.thresholds = {"ks_distance": KS_THRESHOLD, "mass_deviation": MASS_TOLERANCE}
    report.pass_flags = {
        "ks_distance": ks <= KS_THRESHOLD,
        "mass": abs(curve.mass - 1.0) <= MASS_TOLERANCE,
    }
    return report


def run_suite_norm(spec, n_list, trials, seed, dist, threads) -> ComparisonReport:
    if len(n_list) < 3:
        raise ValueError("the norm suite needs at least 3 matrix dimensions")
    edges = compute_edges(spec)
    tau_star = edges.tau_star
    medians = []
    for n in n_list:
        cfg = EnsembleConfig(N=n, dist=dist, seed=seed + n, trials=trials)
        result = simulate_run(spec, cfg, threads=threads)
        medians.append(float(np.median(np.abs(result.norms - tau_star))))
    slope = float(np.polyfit(np.log(n_list), np.log(medians), 1)[0])
    report = ComparisonReport(
        suite="norm",
        spec_hash=spec_digest(spec),
        seed=seed,
        config={"N": list(n_list), "trials": trials, "dist": dist},
        norm_errors=[[int(n), m] for n, m in zip(n_list, medians)],
        norm_scaling_slope=slope,
    )
    report.values = {"tau_star": tau_star}
    report.thresholds = {"norm_scaling_slope": list(NORM_SLOPE_RANGE)}
    report.pass_flags = {"norm_scaling_slope": NORM_SLOPE_RANGE[0] <= slope <= NORM_SLOPE_RANGE[1]}
    return report


def run_suite_deloc(spec, n, trials, seed, dist, eta, threads) -> ComparisonReport:
    edges = compute_edges(spec)
    eta = eta if eta is not None else n**-0.5
    z = edges.tau_plus + 1j * eta
    m = solve_m(z, spec).m
    cfg = EnsembleConfig(N=n, dist=dist, seed=seed, trials=trials)
    result = simulate_run(spec, cfg, probes=[z], edge_targets=[edges.tau_plus], threads=threads)

    ll_bound = 10.0 * n**0.05 / (n * eta)
    deloc_bound = 10.0 * np.log(n) / n
    ll_pass = 0
    deloc_pass = 0
    for traces, stats in zip(result.resolvent_traces, result.edge_vectors):
        if abs(traces[0][1] - m) <= ll_bound:
            ll_pass += 1
        near = [s for s in stats[0] if abs(s.eigenvalue - edges.tau_plus) <= 0.1]
        if all(s.max_component_sq <= deloc_bound for s in near):
            deloc_pass += 1
    needed = _pass_count_needed(trials)
    report = ComparisonReport(
        suite="deloc",
        spec_hash=spec_digest(spec),
        seed=seed,
        config={"N": n, "trials": trials, "dist": dist, "eta": eta},
    )
    report.values = {
        "trace_local_law_passes": ll_pass,
        "delocalization_passes": deloc_pass,
        "trials": trials,
        "trace_local_law_bound": ll_bound,
        "delocalization_bound": deloc_bound,
    }
    report.thresholds = {"passes_needed": needed}
    report.pass_flags = {
        "trace_local_law": ll_pass >= needed,
        "delocalization": deloc_pass >= needed,
    }
    return report


def run_suite_rigidity(spec, n, trials, seed, dist, n_grid, threads) -> ComparisonReport:
    _, edges, curve = _analysis(spec, n_grid)
    gamma = quantiles(curve, n)
    bound = 10.0 * n ** (-2.0 / 3.0 + 0.1)
    cfg = EnsembleConfig(N=n, dist=dist, seed=seed, trials=trials)
    result = simulate_run(spec, cfg, threads=threads)
    passes = 0
    worst = 0.0
    for eigs in result.eigenvalues:
        deviations = [abs(eigs[n - 1 - k] - gamma[n - 1 - k]) for k in range(3)]
        worst = max(worst, *deviations)
        if max(deviations) <= bound:
            passes += 1
    needed = _pass_count_needed(trials)
    report = ComparisonReport(
        suite="rigidity",
        spec_hash=spec_digest(spec),
        seed=seed,
        config={"N": n, "trials": trials, "dist": dist, "n_grid": n_grid},
    )
    report.values = {"passes": passes, "trials": trials, "bound": bound, "worst_deviation": worst}
    report.thresholds = {"passes_needed": needed}
    report.pass_flags = {"rigidity": passes >= needed}
    return report


def run_suite_stability(spec, seed) -> ComparisonReport:
    classification = classify_polynomial(spec)
    if classification.kind == "WignerSquare":
        raise WignerSquareUnsupportedError("the stability suite excludes shifted Wigner squares")
    if np.min(np.abs(spec.eig_a)) < 1e-10 * spec.norm_a:
        raise SingularAError("the stability suite needs invertible A (Dyson-equation residuals)")
    edges = compute_edges(spec, classification)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(77,)))
    max_residual = 0.0
    for _ in range(100):
        z = complex(
            rng.uniform(edges.tau_minus - 1.0, edges.tau_plus + 1.0),
            10.0 ** rng.uniform(-3.0, 0.5),
        )
        delta = float(rng.uniform(0.0, 1.0))
        max_residual = max(max_residual, solve_m_delta(z, delta, spec).de_residual)

    kappas = (1e-2, 1e-4, 1e-6)
    slopes = {}
    for side, edge, sign, regular in (
        ("right", edges.tau_plus, +1, edges.right_edge_regular),
        ("left", edges.tau_minus, -1, edges.left_edge_regular),
    ):
        if not regular:
            continue
        betas = [
            abs(stability_spectrum(edge + sign * k + 1e-10j, 0.0, spec, classification).beta)
            for k in kappas
        ]
        slopes[side] = float(np.polyfit(np.log(kappas), np.log(betas), 1)[0])

    report = ComparisonReport(
        suite="stability",
        spec_hash=spec_digest(spec),
        seed=seed,
        config={"residual_points": 100, "kappas": list(kappas)},
    )
    report.values = {"max_de_residual": max_residual, "beta_slopes": slopes}
    report.thresholds = {
        "max_de_residual": DE_RESIDUAL_THRESHOLD,
        "beta_slope": list(STABILITY_SLOPE_RANGE),
    }
    report.pass_flags = {"de_residual": max_residual <= DE_RESIDUAL_THRESHOLD}
    for side, slope in slopes.items():
        report.pass_flags[f"beta_slope_{side}"] = (
            STABILITY_SLOPE_RANGE[0] <= slope <= STABILITY_SLOPE_RANGE[1]
        )
    return report


def _append_run_record(store_path: str, command: str, spec_hash: str | None, config: dict, summary: dict):
    record = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "spec_hash": spec_hash,
        "command": command,
        "config": config,
        "summary": summary,
    }
    with open(store_path, "a") as fh:
        fh.write(json.dumps(record, sort_keys=True, default=_json_default) + "\n")


def _parse_n_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad N list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty N list")
    return values


def _default_threads() -> int:
    env = os.environ.get("QUADSPEC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadspec",
        description="Spectral analysis and Monte Carlo verification for quadratic polynomials of Wigner matrices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_classify = sub.add_parser("classify", help="print the reducibility classification as JSON")
    p_classify.add_argument("--spec", required=True, help="path to the polynomial JSON file")

    p_analyze = sub.add_parser("analyze", help="edges JSON, density CSV and plot script")
    p_analyze.add_argument("--spec", required=True)
    p_analyze.add_argument("--out", required=True, help="output prefix")
    p_analyze.add_argument("--n-grid", type=int, default=512)

    p_verify = sub.add_parser("verify", help="run a verification suite and write its report")
    p_verify.add_argument("--suite", required=True, choices=SUITES)
    p_verify.add_argument("--spec", help="polynomial JSON (not needed for the lemmas suite)")
    p_verify.add_argument("--out", default="quadspec", help="output prefix")
    p_verify.add_argument("--N", type=_parse_n_list, default=[1024], help="comma-separated dimensions")
    p_verify.add_argument("--trials", type=int, default=20)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--threads", type=int, default=_default_threads())
    p_verify.add_argument("--eta", type=float, default=None)
    p_verify.add_argument("--dist", choices=DISTRIBUTIONS, default=GAUSSIAN_COMPLEX)
    p_verify.add_argument("--n-grid", type=int, default=512)
    return parser


def cmd_classify(args) -> int:
    spec = load_spec(args.spec)
    classification = classify_polynomial(spec)
    sys.stdout.write(json.dumps(classification.to_json_dict(), sort_keys=True, default=_json_default) + "\n")
    return EXIT_OK


def cmd_analyze(args) -> int:
    spec = load_spec(args.spec)
    classification, edges, curve = _analysis(spec, args.n_grid)
    exponents = {}
    for side in ("left", "right"):
        try:
            exponents[side] = fit_edge_exponent(curve, side)
        except InsufficientPointsError:
            exponents[side] = None

    edges_payload = {
        "tau_plus": edges.tau_plus,
        "tau_minus": edges.tau_minus,
        "m_plus": edges.m_plus,
        "m_minus": edges.m_minus,
        "left_edge_regular": edges.left_edge_regular,
        "right_edge_regular": edges.right_edge_regular,
        "left_exponent": edges.left_exponent,
        "right_exponent": edges.right_exponent,
        "fitted_exponent_left": exponents["left"],
        "fitted_exponent_right": exponents["right"],
        "h_prime_at_roots": list(edges.h_prime_at_roots),
        "tau_star": edges.tau_star,
        "mass": curve.mass,
        "classification": classification.to_json_dict(),
    }
    edges_path = f"{args.out}_edges.json"
    csv_path = f"{args.out}_density.csv"
    plot_path = f"{args.out}_plot.gp"
    with open(edges_path, "w") as fh:
        fh.write(json.dumps(edges_payload, sort_keys=True, indent=2, default=_json_default) + "\n")
    write_density_csv(curve, csv_path)
    with open(plot_path, "w") as fh:
        fh.write(
            "\n".join(
                [
                    "set datafile separator ','",
                    "set xlabel 'E'",
                    "set ylabel 'rho(E)'",
                    "set key off",
                    f"plot '{os.path.basename(csv_path)}' using 1:2 every ::1 with lines lw 2",
                    "",
                ]
            )
        )
    _append_run_record(
        f"{args.out}_runs.jsonl",
        command="analyze",
        spec_hash=spec_digest(spec),
        config={"n_grid": args.n_grid},
        summary={"tau_plus": edges.tau_plus, "tau_minus": edges.tau_minus, "mass": curve.mass},
    )
    sys.stdout.write(f"wrote {edges_path}, {csv_path}, {plot_path}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    suite = args.suite
    spec = None
    if suite != "lemmas":
        if not args.spec:
            raise SpecError(f"the {suite} suite requires --spec")
        spec = load_spec(args.spec)

    n_first = args.N[0]
    if suite == "lemmas":
        report = run_suite_lemmas(args.seed)
    elif suite == "density":
        report = run_suite_density(spec, n_first, args.trials, args.seed, args.dist, args.n_grid, args.threads)
    elif suite == "norm":
        report = run_suite_norm(spec, args.N, args.trials, args.seed, args.dist, args.threads)
    elif suite == "deloc":
        report = run_suite_deloc(spec, n_first, args.trials, args.seed, args.dist, args.eta, args.threads)
    elif suite == "rigidity":
        report = run_suite_rigidity(spec, n_first, args.trials, args.seed, args.dist, args.n_grid, args.threads)
    else:
        report = run_suite_stability(spec, args.seed)

    report_path = f"{args.out}_report.json"
    with open(report_path, "w") as fh:
        fh.write(report.to_json())
    for name, flag in sorted(report.pass_flags.items()):
        sys.stdout.write(f"{'PASS' if flag else 'FAIL'} {suite}/{name}\n")
    sys.stdout.write(f"report: {report_path}\n")
    _append_run_record(
        f"{args.out}_runs.jsonl",
        command=f"verify --suite {suite}",
        spec_hash=report.spec_hash,
        config=report.config | {"seed": args.seed},
        summary={"pass_flags": report.pass_flags},
    )
    return EXIT_OK if report.passed else EXIT_CRITERIA


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "classify":
            return cmd_classify(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        return cmd_verify(args)
    except (NoConvergenceError, SingularAError, WignerSquareUnsupportedError, MassDeficitError) as exc:
        sys.stderr.write(f"infrastructure error: {exc}\n")
        return EXIT_INFRA
    except (SpecError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
