"""Command-line front end.

Subcommands
-----------
simulate        emit one observation as CSV
estimate-noise  run the noise-level pipeline and print the estimate
choose          run one parameter-choice method on a single realization
converge        run the configured Monte Carlo study and write its CSV

Exit codes: 0 success, 2 configuration error, 3 numerical failure (for
example the discrepancy principle applied to white noise).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .choice import LevelSolverCache, data_driven_choose, discrepancy_principle, lepskii_choose, oracle_choice
from .discretization import LevelData
from .errors import ConfigError, DataUnavailableError, WhiteNoiseError
from .filters import regularize_svd, tikhonov
from .harness import (
    ExperimentConfig,
    _effective_schedule,
    _lepskii_template,
    build_noise_spec,
    build_operator,
    build_signal,
    parse_config,
    run_mse_study,
    run_veto_study,
    write_mse_csv,
    write_veto_csv,
)
from .noise import observation_to_csv, observe
from .noise_level import refine_delta_hat

__all__ = ["main", "cli_main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statinv",
        description="Statistical regularization experiments for ill-posed problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "estimate-noise", "choose", "converge"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=False, help="path to a key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--method", default=None, help="override the parameter-choice method")
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = parse_config(args.config)
    else:
        cfg = ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.method is not None:
        if args.method not in ("oracle", "discrepancy", "lepskii_known_delta", "lepskii_estimated_delta"):
            raise ConfigError(f"unknown method {args.method!r}")
        cfg.method = args.method
    if args.out is not None:
        cfg.out = args.out
    if not cfg.out:  # empty paths behave like no path at all
        cfg.out = None
    return cfg


def _single_observation(cfg: ExperimentConfig):
    op = build_operator(cfg)
    x_true = build_signal(cfg, op)
    spec = build_noise_spec(cfg, op.grid)
    delta = cfg.delta_list[0]
    return op, x_true, observe(op, x_true, delta, spec, replicate=(0, 0))


def _cmd_simulate(cfg: ExperimentConfig) -> int:
    if cfg.out is None:
        raise ConfigError("simulate needs an output path (--out or 'out' in the config)")
    _, _, obs = _single_observation(cfg)
    observation_to_csv(obs, cfg.out)
    print(f"wrote observation (n={obs.n}, delta={obs.delta:g}) to {cfg.out}")
    return 0


def _cmd_estimate_noise(cfg: ExperimentConfig) -> int:
    op, _, obs = _single_observation(cfg)
    sched = _effective_schedule(cfg, op)
    est = cfg.estimator
    result = refine_delta_hat(
        op, LevelData(obs), tau=est.tau, p=est.p, eps=est.eps,
        m_window=est.m_window, sched=sched, n0=est.n0,
    )
    print(f"delta_tilde_sq = {result.delta_tilde_sq:.17g}")
    print(f"delta_hat      = {result.delta_hat:.17g}")
    print(f"n_used         = {result.n_used}")
    print(f"iterations     = {result.iterations}")
    print(f"converged      = {result.converged}")
    print(f"true delta     = {obs.delta:.17g}")
    return 0


def _write_choice_row(path, delta, delta_hat, j_star, alpha_star, error, flags):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("delta,delta_hat,j_star,alpha_star,error,flags\n")
        fh.write(
            ",".join(
                [
                    format(delta, ".17g"),
                    format(delta_hat, ".17g") if delta_hat is not None else "",
                    str(j_star) if j_star is not None else "",
                    format(alpha_star, ".17g"),
                    format(error, ".17g"),
                    ";".join(flags),
                ]
            )
            + "\n"
        )


def _cmd_choose(cfg: ExperimentConfig) -> int:
    op, x_true, obs = _single_observation(cfg)
    sched = _effective_schedule(cfg, op)
    filt = tikhonov()
    delta = cfg.delta_list[0]
    template = _lepskii_template(cfg, op, delta)
    if cfg.method == "oracle":
        alpha, err = oracle_choice(op, x_true, obs, filt, template.alphas)
        print(f"method = oracle\nalpha  = {alpha:.17g}\nerror  = {err:.17g}")
        delta_hat, j_star, alpha_star, flags = None, None, alpha, []
    elif cfg.method == "discrepancy":
        result = discrepancy_principle(op, obs, filt, cfg.tau_dp, template.alphas)
        x = regularize_svd(filt, op, obs.coeffs, result.alpha).x_alpha
        err = float(np.linalg.norm(x.coeffs - x_true.coeffs))
        print(
            f"method = discrepancy\nalpha  = {result.alpha:.17g}\n"
            f"residual = {result.residual:.17g}\nsatisfied = {result.satisfied}\nerror  = {err:.17g}"
        )
        delta_hat, j_star, alpha_star = None, None, result.alpha
        flags = [] if result.satisfied else ["discrepancy_unsatisfied"]
    elif cfg.method == "lepskii_known_delta":
        lep = lepskii_choose(op, obs, template, sched, cache=LevelSolverCache(op))
        err = float(np.linalg.norm(lep.x_star.coeffs - x_true.coeffs))
        print(
            f"method = lepskii_known_delta\nj_star = {lep.j_star} (m = {lep.m})\n"
            f"alpha  = {lep.alpha_star:.17g}\nerror  = {err:.17g}\nflags  = {lep.flags}"
        )
        delta_hat, j_star, alpha_star, flags = None, lep.j_star, lep.alpha_star, lep.flags
    else:
        estimate, lep, x_final = data_driven_choose(
            op, LevelData(obs), cfg.estimator, template, sched, cache=LevelSolverCache(op)
        )
        err = float(np.linalg.norm(x_final.coeffs - x_true.coeffs))
        print(
            f"method = lepskii_estimated_delta\ndelta_hat = {estimate.delta_hat:.17g}"
            f" (true {obs.delta:.17g})\nj_star = {lep.j_star} (m = {lep.m})\n"
            f"alpha  = {lep.alpha_star:.17g}\nerror  = {err:.17g}\nflags  = {lep.flags}"
        )
        delta_hat, j_star, alpha_star, flags = estimate.delta_hat, lep.j_star, lep.alpha_star, lep.flags
    if cfg.out is not None:
        _write_choice_row(cfg.out, delta, delta_hat, j_star, alpha_star, err, flags)
        print(f"wrote {cfg.out}")
    return 0


def _cmd_converge(cfg: ExperimentConfig) -> int:
    if cfg.out is None:
        raise ConfigError("converge needs an output path (--out or 'out' in the config)")
    if cfg.study == "veto":
        rows = run_veto_study(cfg)
        write_veto_csv(rows, cfg.out)
        for row in rows:
            print(
                f"delta={row.delta:g}  mse_known={row.mse_known:.6g}  "
                f"mse_estimated={row.mse_estimated:.6g}  ratio={row.ratio:.3g}  "
                f"hit_rate={row.hit_rate:.3g}"
            )
    else:
        rows = run_mse_study(cfg)
        write_mse_csv(rows, cfg.out)
        for row in rows:
            print(f"delta={row.delta:g}  method={row.method}  mc_mse={row.mc_mse:.6g}")
    print(f"wrote {cfg.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "simulate":
            return _cmd_simulate(cfg)
        if args.command == "estimate-noise":
            return _cmd_estimate_noise(cfg)
        if args.command == "choose":
            return _cmd_choose(cfg)
        return _cmd_converge(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: cannot write output: {exc}", file=sys.stderr)
        return 2
    except (WhiteNoiseError, DataUnavailableError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def cli_main(argv=None) -> int:
    """Alias kept for callers that expect an explicit argv entry point."""
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
