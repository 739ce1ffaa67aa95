"""Command-line front end: experiment orchestration and JSON/CSV reports.

Every subcommand writes a report with the full resolved configuration, the
result rows, and pass/fail oracle checks.  Identical configuration and seed
produce byte-identical reports: results are assembled in parameter order
(never completion order) and no timestamps are embedded.

Sweep syntax: ``lo:hi:step`` for ranges, comma lists for discrete sets.
Exit codes: 0 success, 2 validation failure, 3 oracle mismatch.
``ZIC_THREADS`` caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional

import numpy as np

from . import counterexamples as cx
from . import entropy as en
from . import geometry as geo
from . import hessian as hs
from . import hkregion as hk
from ._util import parallel_map, rng_for


def parse_values(text: str) -> list[float]:
    """Parse 'lo:hi:step' sweeps, comma lists, or a single number."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"bad range '{text}', want lo:hi:step")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0 or hi < lo:
            raise argparse.ArgumentTypeError(f"bad range '{text}'")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(n)]
    if "," in text:
        return [float(p) for p in text.split(",") if p.strip()]
    return [float(text)]


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _round_floats(obj):
    if isinstance(obj, float):
        return obj
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_report(
    config: dict, results: list[dict], checks: list[dict], output: str, fmt: str
) -> None:
    if fmt == "json":
        payload = {
            "config": _round_floats(config),
            "results": _round_floats(results),
            "checks": _round_floats(checks),
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        if results:
            fields: list[str] = []
            for row in results:
                for key in row:
                    if key not in fields:
                        fields.append(key)
            writer = csv.DictWriter(
                buf, fieldnames=fields, restval="", lineterminator="\r\n"
            )
            writer.writeheader()
            for row in results:
                writer.writerow(_round_floats(row))
        text = buf.getvalue()
    if output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


# ----------------------------------------------------------------------
# Subcommand handlers: each returns (config, results, checks)
# ----------------------------------------------------------------------


def _recipe_config(recipe: cx.SkewRecipe) -> dict:
    return {
        "p_weights": list(recipe.p.weights),
        "p_means": list(recipe.p.means),
        "p_variances": list(recipe.p.variances),
        "q_weights": list(recipe.q.weights),
        "q_means": list(recipe.q.means),
        "q_variances": list(recipe.q.variances),
    }


def cmd_verify_lemma1(args) -> tuple[dict, list[dict], list[dict]]:
    recipe = cx.default_recipe()
    t_grid = np.geomspace(args.t_min, args.t_max, args.t_count)
    curve = en.smoothing_curve(recipe.p, recipe.q, t_grid, n=args.n)
    c1, c15, slope = en.fit_expansion(curve[:, 0], curve[:, 1])
    c1_target, c15_target = en.expansion_targets(recipe.p, recipe.q)
    results = [{"t": float(t), "entropy_gain": float(dh)} for t, dh in curve]
    results.append(
        {
            "c1": c1,
            "c15": c15,
            "residual_slope": slope,
            "c1_quadrature": c1_target,
            "c15_quadrature": c15_target,
        }
    )
    checks = [
        _check(
            "c1_matches_quadrature",
            abs(c1 - c1_target) <= args.c1_tol * abs(c1_target),
            f"fitted {c1:.8f} vs quadrature {c1_target:.8f} (rel tol {args.c1_tol})",
        ),
        _check(
            "c15_matches_quadrature",
            abs(c15 - c15_target) <= args.c15_tol * abs(c15_target),
            f"fitted {c15:.8f} vs quadrature {c15_target:.8f} (rel tol {args.c15_tol})",
        ),
        _check(
            "residual_slope_near_2",
            abs(slope - 2.0) <= 0.25,
            f"log-log residual slope {slope:.3f}",
        ),
    ]
    config = {
        "subcommand": "verify-lemma1",
        "t_min": args.t_min,
        "t_max": args.t_max,
        "t_count": args.t_count,
        "n": args.n,
        "c1_tol": args.c1_tol,
        "c15_tol": args.c15_tol,
        "seed": args.seed,
        **_recipe_config(recipe),
    }
    return config, results, checks


def cmd_verify_lemma2(args) -> tuple[dict, list[dict], list[dict]]:
    recipe = cx.default_recipe()
    info = recipe.validate()
    t_grid = np.geomspace(args.t_min, args.t_max, args.t_count)
    rows = cx.skewness_gap(t_grid, recipe, N1=args.N1, Sigma1=args.Sigma1, n=args.n)
    control = cx.skewness_gap(
        t_grid, recipe, N1=args.N1, Sigma1=args.Sigma1, gaussian_x2=True, n=args.n
    )
    coeff = cx.gap_coefficient(rows)
    target = info["gap_coefficient"]
    results = [
        {"t": float(t), "gap": float(g), "gaussian_control_gap": float(c)}
        for (t, g), (_, c) in zip(rows, control)
    ]
    results.append({"fitted_t32_coefficient": coeff, "quadrature_coefficient": target})
    smallest_two = rows[:2, 1]
    checks = [
        _check(
            "gap_positive_at_smallest_t",
            bool(np.all(smallest_two > 1e-6)),
            f"gaps at two smallest t: {smallest_two.tolist()}",
        ),
        _check(
            "gaussian_control_nonpositive",
            bool(np.all(control[:, 1] <= 1e-6)),
            f"max control gap {control[:, 1].max():.3e}",
        ),
        _check(
            "t32_coefficient_matches",
            abs(coeff - target) <= 0.05 * abs(target),
            f"fitted {coeff:.6f} vs quadrature {target:.6f}",
        ),
    ]
    config = {
        "subcommand": "verify-lemma2",
        "t_min": args.t_min,
        "t_max": args.t_max,
        "t_count": args.t_count,
        "N1": args.N1,
        "Sigma1": args.Sigma1,
        "n": args.n,
        "seed": args.seed,
        **_recipe_config(recipe),
        **info,
    }
    return config, results, checks


def cmd_verify_vertical(args) -> tuple[dict, list[dict], list[dict]]:
    u, L, J = args.u, args.L, args.J
    K = args.K if args.K is not None else (L + u) / (L - 1.0)
    delta = args.delta if args.delta is not None else cx.default_delta(K, L, J)
    eps = args.eps if args.eps is not None else cx.select_epsilon(K, L, delta, J)
    vp = cx.VerticalPerturbation(K=K, L=L, u=u, delta=delta, eps=eps, J=J)
    res = cx.vertical_gap(vp, n=args.n)
    classification = hs.stability_classify(K, u)
    threshold = hs.stability_threshold(u)
    results = [
        {
            "u": u,
            "L": L,
            "K": K,
            "delta": delta,
            "eps": eps,
            "J": J,
            "gaussian_value": res.gaussian_value,
            "base_value": res.base_value,
            "perturbed_value": res.perturbed_value,
            "quadratic_coeff": res.quadratic_coeff,
            "threshold": threshold,
            "classification": classification,
        }
    ]
    if classification == "critical":
        sign_ok = True
        detail = "K at threshold; no sign requirement"
    else:
        sign_ok = (res.quadratic_coeff > 0) == (classification == "unstable")
        detail = (
            f"quadratic_coeff {res.quadratic_coeff:+.3e}, classification {classification}"
        )
    checks = [_check("quadratic_sign_matches_classification", sign_ok, detail)]
    config = {
        "subcommand": "verify-vertical",
        "u": u,
        "L": L,
        "K": K,
        "J": J,
        "delta": delta,
        "eps": eps,
        "n": args.n,
        "seed": args.seed,
    }
    return config, results, checks


def cmd_condition54_root(args) -> tuple[dict, list[dict], list[dict]]:
    results = []
    checks = []
    for u in args.u:
        root = cx.stability_root(u, tol=args.tolerance)
        closed = hs.stability_threshold(u)
        results.append({"u": u, "root": root, "tolerance": args.tolerance})
        checks.append(
            _check(
                f"root_matches_closed_form_u={u:g}",
                abs(root - closed) <= args.tolerance,
                f"bisection {root:.10f} vs closed form {closed:.10f}",
            )
        )
    config = {
        "subcommand": "condition54-root",
        "u": args.u,
        "tolerance": args.tolerance,
        "seed": args.seed,
    }
    return config, results, checks


def _parse_coeffs(text: str) -> dict[int, float]:
    out: dict[int, float] = {}
    if not text:
        return out
    for piece in text.split(","):
        a, c = piece.split(":")
        out[int(a)] = float(c)
    return out


def cmd_hessian(args) -> tuple[dict, list[dict], list[dict]]:
    u, L = args.u, args.L
    K = (L + u) / (L - 1.0)
    A = hs.HermiteCoeffVector(_parse_coeffs(args.A), K)
    B = hs.HermiteCoeffVector(_parse_coeffs(args.B), L)
    report = hs.hessian_quadratic_form(K, L, u, A, B)
    results = [
        {"alpha": a, "I_alpha": v} for a, v in sorted(report.per_alpha_terms.items())
    ]
    results.append(
        {
            "total": report.total,
            "classification": report.classification,
            "K": K,
            "threshold": hs.stability_threshold(u),
        }
    )
    checks = [
        _check(
            "total_equals_ledger_sum",
            abs(report.total - sum(report.per_alpha_terms.values())) <= 1e-12,
            "ledger additivity",
        )
    ]
    config = {
        "subcommand": "hessian",
        "u": u,
        "L": L,
        "K": K,
        "A": args.A,
        "B": args.B,
        "seed": args.seed,
    }
    return config, results, checks


def cmd_phase_diagram(args) -> tuple[dict, list[dict], list[dict]]:
    cells = hs.phase_diagram(args.u, args.L)
    results = [
        {"u": c.u, "L": c.L, "K": c.K, "classification": c.classification}
        for c in cells
    ]
    thr_ok = all(hs.stability_threshold(u) > 1.0 for u in args.u)
    checks = [
        _check(
            "threshold_above_1",
            thr_ok,
            "stability threshold exceeds 1 for every u in the grid",
        )
    ]
    config = {
        "subcommand": "phase-diagram",
        "u": args.u,
        "L": args.L,
        "seed": args.seed,
    }
    return config, results, checks


def cmd_theorem5_epsilon(args) -> tuple[dict, list[dict], list[dict]]:
    L = np.asarray(args.L, dtype=float)
    K = hs.gaussian_maximizer(L, args.u)
    cert = hs.local_optimality_radius(K, L, args.u)
    if cert is None:
        results = [{"u": args.u, "L": list(map(float, L)), "eps": None}]
    else:
        results = [
            {
                "u": args.u,
                "L": list(map(float, L)),
                "K": list(map(float, K)),
                "eps": cert.eps,
                "eps1": cert.eps1,
                "eps2": cert.eps2,
                "rayleigh_min": cert.rayleigh_min,
            }
        ]
    config = {
        "subcommand": "theorem5-epsilon",
        "u": args.u,
        "L": args.L,
        "seed": args.seed,
    }
    return config, results, []


def cmd_hk_region(args) -> tuple[dict, list[dict], list[dict]]:
    params = hk.HKParams(u=args.u, N1=args.N1, N2=max(args.u, 1e-12), q1=1.0, q2=1.0)

    def cell(pair):
        q1, q2 = pair
        res = hk.fixed_power_value(q1, q2, params)
        g1 = hk.power_control_value(q1, q2, params, grid_n=args.envelope_grid)
        return {
            "q1": q1,
            "q2": q2,
            "f1": res.value,
            "g1": g1,
            "argmax_J": res.J,
            "argmax_L": res.L,
            "argmax_K": res.K,
            "f1_eq_g1": bool(g1 - res.value <= 1e-5),
        }

    pairs = [(q1, q2) for q1 in args.q1 for q2 in args.q2]
    results = parallel_map(cell, pairs)
    checks = [
        _check(
            "envelope_majorizes",
            all(r["g1"] >= r["f1"] - 1e-9 for r in results),
            "g1 >= f1 on every cell",
        )
    ]
    config = {
        "subcommand": "hk-region",
        "u": args.u,
        "N1": args.N1,
        "q1": args.q1,
        "q2": args.q2,
        "envelope_grid": args.envelope_grid,
        "seed": args.seed,
    }
    return config, results, checks


def cmd_lemma5_audit(args) -> tuple[dict, list[dict], list[dict]]:
    params = hk.HKParams(u=args.u, N1=args.N1, N2=max(args.u, 1e-12), q1=1.0, q2=1.0)
    rng = rng_for(args.seed, "lemma5-audit")
    report = hk.eigenvalue_bound_audit(
        1, params, args.samples, rng, grid_n=args.envelope_grid
    )
    results = [
        {
            "J": r.q1,
            "L": r.q2,
            "applicable": r.applicable,
            "K": r.max_eigenvalue,
            "case": r.case,
            "bound_holds": r.bound_holds,
        }
        for r in report.records
    ]
    checks = [
        _check(
            "bound_holds_on_applicable_cells",
            report.violations == 0,
            f"{report.applicable} applicable cells, {report.violations} violations "
            f"of K+N1 <= {report.bound:.6f}",
        )
    ]
    config = {
        "subcommand": "lemma5-audit",
        "u": args.u,
        "N1": args.N1,
        "samples": args.samples,
        "envelope_grid": args.envelope_grid,
        "seed": args.seed,
    }
    return config, results, checks


def cmd_theorem4_audit(args) -> tuple[dict, list[dict], list[dict]]:
    params = hk.HKParams(u=args.u, N1=args.N1, N2=max(args.u, 1e-12), q1=1.0, q2=1.0)
    rng = rng_for(args.seed, "theorem4-audit")
    report = hk.eigenvalue_bound_audit(
        args.d, params, args.samples, rng, grid_n=args.envelope_grid
    )
    results = [
        {
            "q1": r.q1,
            "q2": r.q2,
            "applicable": r.applicable,
            "max_eigenvalue": r.max_eigenvalue,
            "bound_holds": r.bound_holds,
        }
        for r in report.records
    ]
    checks = [
        _check(
            "eigenvalue_bound_holds",
            report.violations == 0,
            f"{report.applicable} applicable cells, {report.violations} violations "
            f"of max eig <= {report.bound - params.N1:.6f}",
        )
    ]
    config = {
        "subcommand": "theorem4-audit",
        "d": args.d,
        "u": args.u,
        "N1": args.N1,
        "samples": args.samples,
        "envelope_grid": args.envelope_grid,
        "seed": args.seed,
    }
    return config, results, checks


def cmd_constant_power_gap(args) -> tuple[dict, list[dict], list[dict]]:
    params = hk.HKParams(u=args.u, N1=args.N1, N2=args.N2, q1=1.0, q2=1.0)
    res = hk.constant_power_gap(params, A=args.A, n=args.n)
    results = [
        {
            "gaussian_value": res.gaussian_value,
            "lower_witness": res.lower_witness,
            "gap": res.gap,
            "witness_gain": res.witness_gain,
            "mixing_variance": res.mixing_variance,
            "slack": res.slack,
            "raw_witness_value": res.raw_witness_value,
            "q1": res.q1,
            "q2": res.q2,
        }
    ]
    checks = [
        _check(
            "witness_beats_gaussian",
            res.gap > 0,
            f"lower witness {res.lower_witness:.6f} vs gaussian {res.gaussian_value:.6f}",
        ),
        _check(
            "mixing_slack_within_budget",
            res.slack <= res.witness_gain / 2.0,
            f"slack {res.slack:.3e} <= c/2 = {res.witness_gain / 2:.3e}",
        ),
    ]
    config = {
        "subcommand": "constant-power-gap",
        "u": args.u,
        "N1": args.N1,
        "N2": args.N2,
        "A": res.mixing_variance,
        "n": args.n,
        "seed": args.seed,
    }
    return config, results, checks


def cmd_conjecture2_map(args) -> tuple[dict, list[dict], list[dict]]:
    params = hk.HKParams(u=1.0, N1=args.N1, N2=1.0, q1=1.0, q2=1.0)
    cells = hk.power_control_map(
        args.u, args.q, params, grid_n=args.envelope_grid
    )
    results = [
        {
            "u": c.u,
            "q1": c.q1,
            "q2": c.q2,
            "f1": c.f1,
            "g1": c.g1,
            "f1_eq_g1": c.f1_eq_g1,
            "stationary_K": c.stationary_K,
        }
        for c in cells
    ]
    bad = [
        c
        for c in cells
        if c.f1_eq_g1
        and c.q2 > 0  # q2=0 columns have no interferer budget to trade
        and c.stationary_K + args.N1 > 1.0 + math.sqrt(1.0 + c.u) + 1e-6
    ]
    checks = [
        _check(
            "equal_cells_respect_variance_bound",
            not bad,
            f"{len(bad)} equality cells violate K+N1 <= 1+sqrt(1+u)",
        )
    ]
    config = {
        "subcommand": "conjecture2-map",
        "u": args.u,
        "q": args.q,
        "N1": args.N1,
        "envelope_grid": args.envelope_grid,
        "seed": args.seed,
    }
    return config, results, checks


def cmd_geometry(args) -> tuple[dict, list[dict], list[dict]]:
    ts = args.t

    def row(t):
        r = geo.volume_ratio(t)
        rb = geo.volume_ratio(t, round_interferer=True)
        return {
            "t": t,
            "ratio": r,
            "ratio_round_interferer": rb,
            "ratio_gt_1": bool(r > 1.0),
        }

    results = parallel_map(row, ts)
    coeff = geo.ratio_leading_coefficient()
    exact = geo.RATIO_COEFFICIENT_EXACT
    results.append({"fitted_inverse_t_coefficient": coeff, "exact_coefficient": exact})
    checks = [
        _check(
            "ratio_exceeds_1",
            all(r["ratio_gt_1"] for r in results[:-1] if r["t"] >= 20.0),
            "non-round interferer beats the Gaussian direction for t >= 20",
        ),
        _check(
            "round_control_bounded",
            all(r["ratio_round_interferer"] <= 1.0 + 1e-9 for r in results[:-1]),
            "round interferer never exceeds 1 (Brunn-Minkowski direction)",
        ),
        _check(
            "leading_coefficient_matches",
            abs(coeff - exact) <= 0.01 * abs(exact),
            f"fit {coeff:.8f} vs exact {exact:.8f}",
        ),
    ]
    config = {"subcommand": "geometry", "t": ts, "seed": args.seed}
    return config, results, checks


def cmd_limit_functional(args) -> tuple[dict, list[dict], list[dict]]:
    results = []
    checks = []
    for L in args.L:
        res = cx.fisher_limit_gain(L, J=args.J, n=args.n)
        beats = res.quadratic_coeff > 0
        results.append(
            {
                "L": L,
                "K": res.K,
                "eps0": res.eps0,
                "gaussian_value": res.gaussian_value,
                "gain_at_eps0": res.gains[0],
                "quadratic_coeff": res.quadratic_coeff,
                "perturbation_beats_gaussian": bool(beats),
            }
        )
        expected_unstable = res.K > 3.0
        checks.append(
            _check(
                f"gain_sign_L={L:g}",
                beats == expected_unstable,
                f"quadratic coeff {res.quadratic_coeff:+.3e}, stationary K {res.K:.3f}",
            )
        )
    config = {
        "subcommand": "limit-functional",
        "L": args.L,
        "J": args.J,
        "n": args.n,
        "seed": args.seed,
    }
    return config, results, checks


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ziclab",
        description="Numerical experiments on Gaussian optimality for the "
        "scalar Z-interference channel.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", default="-", help="report path, or - for stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("verify-lemma1", help="entropy expansion coefficients vs quadrature")
    p.add_argument("--t-min", type=float, default=1e-4)
    p.add_argument("--t-max", type=float, default=1e-2)
    p.add_argument("--t-count", type=int, default=10)
    p.add_argument("--n", type=int, default=8192)
    p.add_argument("--c1-tol", type=float, default=0.02)
    p.add_argument("--c15-tol", type=float, default=0.05)
    common(p)
    p.set_defaults(handler=cmd_verify_lemma1)

    p = sub.add_parser("verify-lemma2", help="skewed-interferer gap vs Gaussian control")
    p.add_argument("--t-min", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=1e-2)
    p.add_argument("--t-count", type=int, default=6)
    p.add_argument("--N1", type=float, default=0.0)
    p.add_argument("--Sigma1", type=float, default=0.0)
    p.add_argument("--n", type=int, default=8192)
    common(p)
    p.set_defaults(handler=cmd_verify_lemma2)

    p = sub.add_parser("verify-vertical", help="density-perturbation gap and eps^2 slope")
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.4)
    p.add_argument("--K", type=float, default=None, help="default: stationary (L+u)/(L-1)")
    p.add_argument("--J", type=int, default=2)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--n", type=int, default=8192)
    common(p)
    p.set_defaults(handler=cmd_verify_vertical)

    p = sub.add_parser("condition54-root", help="bisection root of the norm balance")
    p.add_argument("--u", type=parse_values, default=[1.0])
    p.add_argument("--tolerance", type=float, default=1e-8)
    common(p)
    p.set_defaults(handler=cmd_condition54_root)

    p = sub.add_parser("hessian", help="per-order Hessian ledger at a stationary point")
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--L", type=float, default=3.0)
    p.add_argument("--A", default="1:1.0", help="order:coeff list, e.g. 1:1.0,2:0.5")
    p.add_argument("--B", default="", help="order:coeff list (order 1 must be absent)")
    common(p)
    p.set_defaults(handler=cmd_hessian)

    p = sub.add_parser("phase-diagram", help="stability classification over a (u, L) grid")
    p.add_argument("--u", type=parse_values, required=True)
    p.add_argument("--L", type=parse_values, required=True)
    common(p)
    p.set_defaults(handler=cmd_phase_diagram)

    p = sub.add_parser("theorem5-epsilon", help="local-optimality certificate radius")
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--L", type=parse_values, default=[3.0], help="diagonal entries")
    common(p)
    p.set_defaults(handler=cmd_theorem5_epsilon)

    p = sub.add_parser("hk-region", help="fixed-power and power-control value tables")
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--N1", type=float, default=0.0)
    p.add_argument("--q1", type=parse_values, required=True)
    p.add_argument("--q2", type=parse_values, required=True)
    p.add_argument("--envelope-grid", type=int, default=129)
    common(p)
    p.set_defaults(handler=cmd_hk_region)

    p = sub.add_parser("lemma5-audit", help="maximizer-variance bound on random cells")
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--N1", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--envelope-grid", type=int, default=129)
    common(p)
    p.set_defaults(handler=cmd_lemma5_audit)

    p = sub.add_parser("theorem4-audit", help="eigenvalue bound audit (d in {1,2})")
    p.add_argument("--d", type=int, choices=(1, 2), default=1)
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--N1", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--envelope-grid", type=int, default=129)
    common(p)
    p.set_defaults(handler=cmd_theorem4_audit)

    p = sub.add_parser("constant-power-gap", help="non-Gaussian witness vs Gaussian value")
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--N1", type=float, default=1.0)
    p.add_argument("--N2", type=float, default=0.05)
    p.add_argument("--A", type=float, default=None, help="mixing variance (default: auto)")
    p.add_argument("--n", type=int, default=8192)
    common(p)
    p.set_defaults(handler=cmd_constant_power_gap)

    p = sub.add_parser("conjecture2-map", help="power-control footprint over (q1, q2)")
    p.add_argument("--u", type=parse_values, default=[1.0])
    p.add_argument("--q", type=parse_values, required=True)
    p.add_argument("--N1", type=float, default=0.0)
    p.add_argument("--envelope-grid", type=int, default=129)
    common(p)
    p.set_defaults(handler=cmd_conjecture2_map)

    p = sub.add_parser("geometry", help="volume-ratio sweep with exact mixed areas")
    p.add_argument("--t", type=parse_values, default=parse_values("10:200:10"))
    common(p)
    p.set_defaults(handler=cmd_geometry)

    p = sub.add_parser("limit-functional", help="Fisher limit functional perturbation gains")
    p.add_argument("--L", type=parse_values, default=[1.2, 1.6, 2.0])
    p.add_argument("--J", type=int, default=2)
    p.add_argument("--n", type=int, default=16384)
    common(p)
    p.set_defaults(handler=cmd_limit_functional)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config, results, checks = args.handler(args)
    except (ValueError, cx.RecipeRejectedError, hk.NotApplicableError,
            hk.WitnessUnavailableError, en.NegativeDensityError) as exc:
        print(f"ziclab: {exc}", file=sys.stderr)
        return 2
    # the output path is environment, not experiment configuration; embedding
    # it would break byte-identical reports across destinations
    config.setdefault("format", args.format)
    write_report(config, results, checks, args.output, args.format)
    if any(not c["passed"] for c in checks):
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
