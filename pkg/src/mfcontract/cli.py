"""Command-line entry point: ``mfcontract {solve,simulate,verify-ic,sweep} --config FILE --out DIR``.

Exit codes: 0 success, 2 configuration error, 3 horizon too long for the
closed-form value function, 4 verification failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import kernels, report, svgplot
from .config import RunConfig, load_config
from .errors import ConfigError, HorizonTooLong, InvalidParameter, MFContractError, NonFiniteState
from .evaluator import (agent_value, ic_verify, martingale_check, moment_comparison, predicted_principal_value,
                        principal_value)
from .generic_mkv import GenericRun, benchmark_model, simulate_generic
from .incentives import IncentivePolicy, equilibrium_agent_policy, optimal_policy, reservation_level
from .model import validate_params
from .moments import solve_moments
from .simulator import simulate_equilibrium
from .value_ode import solve_coefficients

log = logging.getLogger("mfcontract")

EXIT_OK, EXIT_CONFIG, EXIT_HORIZON, EXIT_VERIFY = 0, 2, 3, 4


class VerificationFailed(Exception):
    pass


def _solve(p, n_grid, y0=None):
    coeffs = solve_coefficients(p, n_grid)
    pol = optimal_policy(coeffs, p, y0)
    agent = equilibrium_agent_policy(pol, p)
    flow = solve_moments(coeffs, p)
    return coeffs, pol, agent, flow


def _write_solution(out: Path, p, coeffs, pol, flow):
    report.write_coefficients(out / "coefficients.csv", coeffs)
    report.write_policy(out / "policy.csv", pol, coeffs, p)
    report.write_moments(out / "moments.csv", flow, coeffs)


def run_solve(cfg: RunConfig, out: Path) -> int:
    p = cfg.market
    coeffs, pol, _, flow = _solve(p, cfg.n_grid, cfg.y0)
    _write_solution(out, p, coeffs, pol, flow)
    summary = {
        "h0_0": coeffs.h0_at(0.0),
        "h1_0": coeffs.h1_at(0.0),
        "h2_0": coeffs.h2_at(0.0),
        "reservation_level": reservation_level(p),
        "y0": pol.y0,
        "predicted_principal_value": predicted_principal_value(coeffs, p, pol.y0),
    }
    report.write_summary(out / "solve_summary.txt", summary)
    print(f"h1(0) = {summary['h1_0']:.6f}, predicted principal value = {summary['predicted_principal_value']:.6f}")
    return EXIT_OK


def _moment_plots(out: Path, rows, flow):
    svgplot.line_chart(out / "plots" / "mean.svg", [
        svgplot.Series("ODE m(t)", flow.grid, flow.m),
        svgplot.Series("Monte Carlo", rows["t"], rows["m_mc"], rows["m_se"] * 3, markers=True),
    ], title="Population mean", xlabel="t", ylabel="m(t)")
    svgplot.line_chart(out / "plots" / "variance.svg", [
        svgplot.Series("ODE v(t)", flow.grid, flow.v),
        svgplot.Series("Monte Carlo", rows["t"], rows["v_mc"], rows["v_se"] * 3, markers=True),
    ], title="Population variance", xlabel="t", ylabel="v(t)")


def run_simulate(cfg: RunConfig, out: Path) -> int:
    p = cfg.market
    coeffs, pol, agent, flow = _solve(p, cfg.n_grid, cfg.y0)
    _write_solution(out, p, coeffs, pol, flow)
    ens = simulate_equilibrium(p, coeffs, pol, agent, flow, cfg.sim)
    rows = moment_comparison(ens, flow)
    report.write_moment_comparison(out / "moment_comparison.csv", rows)
    worst = float(np.max(np.abs(np.concatenate([rows["z_m"], rows["z_v"]]))))
    ok = worst <= cfg.threshold
    av = agent_value(ens, p)
    pv = principal_value(ens, p)
    x = ens.x_terminal
    summary = {
        "n_paths": cfg.sim.n_paths,
        "n_steps": cfg.sim.n_steps,
        "seed": cfg.sim.seed,
        "y0": pol.y0,
        "mean_x_terminal": x.mean(),
        "se_x_terminal": x.std(ddof=1) / math.sqrt(x.size) if x.size > 1 else 0.0,
        "var_x_terminal": x.var(ddof=1) if x.size > 1 else 0.0,
        "ode_m_T": flow.m[-1],
        "ode_v_T": flow.v[-1],
        "mean_xi": ens.y_terminal.mean(),
        "mean_jumps": ens.jump_count.mean(),
        "expected_jumps": ens.expected_jumps,
        "agent_value": av.mean,
        "agent_value_se": av.std_error,
        "envelope": -math.exp(-p.gamma * pol.y0),
        "principal_value": pv.mean,
        "principal_value_se": pv.std_error,
        "predicted_principal_value": predicted_principal_value(coeffs, p, pol.y0),
        "max_abs_z": worst,
        "moments_consistent": ok,
    }
    report.write_summary(out / "ensemble_summary.txt", summary)
    if cfg.dump_paths:
        report.write_paths(out / "paths.csv", ens)
    if cfg.plots:
        _moment_plots(out, rows, flow)
        svgplot.histogram(out / "plots" / "xi_histogram.svg", ens.y_terminal, title="Contract payments",
                          xlabel="xi")
    print(f"agent value {av}, principal value {pv}; worst moment z-score {worst:.2f}")
    if not ok:
        raise VerificationFailed(f"moment comparison exceeds {cfg.threshold:g} SE (max |z| = {worst:.2f})")
    return EXIT_OK


def _load_policy_override(path, y0: float) -> IncentivePolicy:
    try:
        cols = report.read_csv(path)
    except (OSError, ValueError, StopIteration) as exc:
        raise ConfigError(f"cannot read policy file {path}: {exc}") from None
    missing = [c for c in ("t", "z", "u_minus1") if c not in cols]
    if missing:
        raise ConfigError(f"policy file {path} lacks column(s): {', '.join(missing)}")
    return IncentivePolicy.from_table(cols["t"], cols["z"], cols["u_minus1"], y0)


def run_verify_ic(cfg: RunConfig, out: Path, policy_override=None) -> int:
    """IC check; with an override file the agent follows its best response to
    the file's exposures while the contract itself stays optimal."""
    p = cfg.market
    coeffs, pol, agent, flow = _solve(p, cfg.n_grid, cfg.y0)
    if policy_override is not None:
        agent = equilibrium_agent_policy(_load_policy_override(policy_override, pol.y0), p)
    eq = simulate_equilibrium(p, coeffs, pol, agent, flow, cfg.sim)
    rep = ic_verify(p, coeffs, pol, agent, flow, cfg.sim, cfg.deviations, cfg.threshold, equilibrium=eq)
    diag = martingale_check(eq, p, cfg.threshold)
    report.write_ic_report(out / "ic_report.csv", rep)
    report.write_martingale(out / "martingale.csv", diag)
    summary = {
        "y0": pol.y0,
        "optimal_value": rep.optimal_value.mean,
        "optimal_value_se": rep.optimal_value.std_error,
        "envelope": rep.reservation,
        "envelope_passed": rep.envelope_passed,
        "deviations_passed": all(d.passed for d in rep.deviations),
        "max_gap_over_se": max((d.gap / d.gap_se if d.gap_se > 0 else 0.0) for d in rep.deviations),
        "martingale": diag.martingale,
        "threshold": rep.threshold,
        "passed": rep.passed,
    }
    report.write_summary(out / "ic_summary.txt", summary)
    print(f"IC verdict: {'pass' if rep.passed else 'FAIL'} (optimal value {rep.optimal_value})")
    if not rep.passed:
        raise VerificationFailed("incentive compatibility check failed")
    return EXIT_OK


def run_sweep(cfg: RunConfig, out: Path) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep requires run.sweep with field and values")
    name = cfg.sweep.field
    rows, series = [], []
    for value in cfg.sweep.values:
        row = {"value": value, "h0_0": math.nan, "predicted": math.nan, "mc_principal": math.nan,
               "mc_se": math.nan, "expected_jumps": math.nan, "error": ""}
        try:
            p = validate_params(cfg.market.replace(**{name: value}))
            coeffs, pol, agent, flow = _solve(p, cfg.n_grid, cfg.y0)
            ens = simulate_equilibrium(p, coeffs, pol, agent, flow, cfg.sim)
            pv = principal_value(ens, p)
            row.update(h0_0=coeffs.h0_at(0.0), predicted=predicted_principal_value(coeffs, p, pol.y0),
                       mc_principal=pv.mean, mc_se=pv.std_error, expected_jumps=ens.expected_jumps)
            series.append(svgplot.Series(f"{name}={value:g}", flow.grid, flow.m))
        except (InvalidParameter, HorizonTooLong, NonFiniteState) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            log.warning("sweep %s=%g failed: %s", name, value, row["error"])
        rows.append(row)
    header = ["value", "h0_0", "predicted", "mc_principal", "mc_se", "expected_jumps", "error"]
    report.write_csv(out / "sweep.csv", [name if h == "value" else h for h in header],
                     ([r[h] for h in header] for r in rows))
    if cfg.plots and series:
        svgplot.line_chart(out / "plots" / "sweep.svg", series, title=f"Mean path across {name}",
                           xlabel="t", ylabel="m(t)")
    print(f"sweep over {name}: {sum(not r['error'] for r in rows)}/{len(rows)} values solved")
    return EXIT_OK


def run_simulate_generic(cfg: RunConfig, out: Path, model_name: str, rate: float) -> int:
    p = cfg.market
    coeffs, pol, agent, flow = _solve(p, cfg.n_grid, cfg.y0)
    run = GenericRun(benchmark_model(model_name, p, rate), pol, p.gamma, cfg.sim, p.horizon, p.m0, p.v0)
    res = simulate_generic(run)
    ens = res.ensemble
    m, v = ens.snapshot_moments()
    report.write_csv(out / "generic_moments.csv", ["t", "m", "v"], zip(ens.snapshot_times, m, v))
    av = agent_value(ens, p)
    report.write_summary(out / "generic_summary.txt", {
        "model": model_name,
        "picard_iterations": res.iterations,
        "picard_gap": res.gap,
        "m_T": m[-1],
        "v_T": v[-1],
        "mean_xi": ens.y_terminal.mean(),
        "agent_value": av.mean,
        "agent_value_se": av.std_error,
    })
    print(f"{model_name}: m(T) = {m[-1]:.6g}, v(T) = {v[-1]:.6g}, agent value {av}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfcontract", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{solve,simulate,verify-ic,sweep}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, help="override sim.seed")
    common.add_argument("--paths", type=int, help="override sim.n_paths")
    common.add_argument("--workers", type=int, help="threads for path blocks (results do not depend on it)")
    common.add_argument("--backend", choices=kernels.available_backends(), help="path kernel backend")
    sub.add_parser("solve", parents=[common], help="value coefficients, policy and moment curves")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo ensemble and moment check")
    v = sub.add_parser("verify-ic", parents=[common], help="incentive-compatibility and martingale checks")
    v.add_argument("--policy-override", help="CSV with t,z,u_minus1 columns the agent responds to")
    sub.add_parser("sweep", parents=[common], help="repeat solve and simulate over one parameter")
    g = sub.add_parser("simulate-generic", parents=[common])
    g.add_argument("--model", choices=("example", "poisson", "diffusion"), default="example")
    g.add_argument("--rate", type=float, default=1.0, help="base rate for the poisson model")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        cfg = load_config(args.config).with_overrides(args.seed, args.paths, args.workers)
        out.mkdir(parents=True, exist_ok=True)
        if args.backend:
            kernels.set_backend(args.backend)
        if args.command == "solve":
            return run_solve(cfg, out)
        if args.command == "simulate":
            return run_simulate(cfg, out)
        if args.command == "verify-ic":
            return run_verify_ic(cfg, out, args.policy_override)
        if args.command == "sweep":
            return run_sweep(cfg, out)
        return run_simulate_generic(cfg, out, args.model, args.rate)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HorizonTooLong as exc:
        print(f"horizon too long: {exc}", file=sys.stderr)
        return EXIT_HORIZON
    except (VerificationFailed, MFContractError) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
