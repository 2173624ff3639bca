"""Monte Carlo experiment driver: MSE studies, the bias-variance check, and
the headline comparison of known-delta versus estimated-delta pipelines.

Experiments are configured by flat ``key = value`` text files with
namespaced keys (see ``DEFAULTS``).  All randomness is keyed by
(seed, delta index, replicate), so reruns with the same configuration
produce byte-identical CSV output, and the known-delta and estimated-delta
pipelines see identical noise realizations replicate by replicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .choice import (
    LepskiiConfig,
    LevelSolverCache,
    data_driven_choose,
    discrepancy_principle,
    lepskii_choose,
    oracle_choice,
)
from .discretization import LevelData, LevelSchedule
from .errors import ConfigError
from .filters import Filter, filter_value, regularize_svd, tikhonov, variance_bound
from .grid import Grid, L2Vector
from .noise import NoiseSpec, draw_noise, observe
from .noise_level import EstimatorConfig
from .operators import DiscreteOperator, apply, build_holder_kernel_operator, build_integration_operator
from .signals import dirac_direction, make_signal

__all__ = [
    "ExperimentConfig",
    "MseRow",
    "VetoRow",
    "BiasVarianceReport",
    "parse_config",
    "config_from_mapping",
    "build_operator",
    "build_signal",
    "build_noise_spec",
    "run_mse_study",
    "run_bias_variance_check",
    "run_veto_study",
    "write_mse_csv",
    "write_veto_csv",
]

METHODS = ("oracle", "discrepancy", "lepskii_known_delta", "lepskii_estimated_delta")

FLOAT_FMT = ".17g"


def _fmt(v: float) -> str:
    return format(float(v), FLOAT_FMT)


@dataclass
class ExperimentConfig:
    """Frame for one convergence experiment along a decreasing delta list."""

    operator_kind: str = "integration"
    operator_n: int = 1024
    signal_kind: str = "smooth"
    signal_nu: float = 1.0
    signal_amplitude: float = 1.0
    noise_kind: str = "gaussian_white"
    delta_list: tuple = (0.1, 0.05, 0.02, 0.01)
    replicates: int = 200
    seed: int = 20260811
    method: str = "lepskii_known_delta"
    study: str = "mse"
    schedule: LevelSchedule = field(default_factory=LevelSchedule)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    lepskii_q: float = 2.0
    lepskii_c_psi: float = 1.0
    tau_dp: float = 2.0
    epsilons: tuple = (0.5, 0.2, 0.1, 0.05)
    out: Optional[str] = None

    def __post_init__(self):
        if self.operator_kind not in ("integration", "min_kernel"):
            raise ConfigError(f"unknown operator.kind {self.operator_kind!r}")
        if self.operator_n < 2:
            raise ConfigError("operator.n must be >= 2")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.study not in ("mse", "veto"):
            raise ConfigError(f"unknown study {self.study!r}")
        if self.noise_kind not in ("gaussian_white", "dirac", "scaled_rv"):
            raise ConfigError(f"unknown noise.kind {self.noise_kind!r}")
        deltas = tuple(float(d) for d in self.delta_list)
        if len(deltas) == 0 or any(d <= 0 for d in deltas):
            raise ConfigError("delta_list must contain positive values")
        if any(b >= a for a, b in zip(deltas, deltas[1:])):
            raise ConfigError("delta_list must be strictly decreasing")
        self.delta_list = deltas
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        self.epsilons = tuple(float(e) for e in self.epsilons)


# flat config keys -> (attribute, parser)
_KEYS = {
    "operator.kind": ("operator_kind", str),
    "operator.n": ("operator_n", int),
    "signal.kind": ("signal_kind", str),
    "signal.nu": ("signal_nu", float),
    "signal.amplitude": ("signal_amplitude", float),
    "noise.kind": ("noise_kind", str),
    "delta_list": ("delta_list", lambda s: tuple(float(v) for v in s.split(","))),
    "replicates": ("replicates", int),
    "seed": ("seed", int),
    "method": ("method", str),
    "study": ("study", str),
    "schedule.r": ("schedule.r", float),
    "schedule.eta": ("schedule.eta", float),
    "schedule.c1": ("schedule.c1", float),
    "schedule.c2": ("schedule.c2", float),
    "schedule.n_max": ("schedule.n_max", int),
    "estimator.tau": ("estimator.tau", float),
    "estimator.K": ("estimator.K", float),
    "estimator.p": ("estimator.p", float),
    "estimator.eps": ("estimator.eps", float),
    "estimator.m_window": ("estimator.m_window", int),
    "estimator.n0": ("estimator.n0", int),
    "lepskii.q": ("lepskii_q", float),
    "lepskii.C_psi": ("lepskii_c_psi", float),
    "choice.tau_dp": ("tau_dp", float),
    "epsilons": ("epsilons", lambda s: tuple(float(v) for v in s.split(","))),
    "out": ("out", str),
}


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    plain = {}
    sched = {}
    est = {}
    for key, raw in mapping.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        attr, parse = _KEYS[key]
        try:
            value = parse(raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"cannot parse {key} = {raw!r}: {exc}") from exc
        if attr.startswith("schedule."):
            sched[attr.split(".", 1)[1]] = value
        elif attr.startswith("estimator."):
            est[attr.split(".", 1)[1]] = value
        else:
            plain[attr] = value
    try:
        schedule = LevelSchedule(**sched) if sched else LevelSchedule()
        estimator = EstimatorConfig(**est) if est else EstimatorConfig()
        return ExperimentConfig(schedule=schedule, estimator=estimator, **plain)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> ExperimentConfig:
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    mapping = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                mapping[key] = value
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_mapping(mapping)


def build_operator(cfg: ExperimentConfig) -> DiscreteOperator:
    grid = Grid(cfg.operator_n)
    if cfg.operator_kind == "integration":
        return build_integration_operator(grid)
    return build_holder_kernel_operator(grid, np.minimum, holder_s=1.0, volterra=False)


def build_signal(cfg: ExperimentConfig, op: DiscreteOperator) -> L2Vector:
    return make_signal(
        cfg.signal_kind, op.grid, op=op, nu=cfg.signal_nu, amplitude=cfg.signal_amplitude
    )


def build_noise_spec(cfg: ExperimentConfig, grid: Grid) -> NoiseSpec:
    if cfg.noise_kind == "gaussian_white":
        return NoiseSpec.gaussian_white(cfg.seed)
    direction = dirac_direction(grid)
    if cfg.noise_kind == "dirac":
        return NoiseSpec.dirac(direction, seed=cfg.seed)
    return NoiseSpec.scaled_rv(direction, seed=cfg.seed)


@dataclass
class MseRow:
    """Per-delta Monte Carlo summary of one method."""

    delta: float
    method: str
    mc_mse: float
    mc_bias_sq: float
    mc_variance: float
    rep_count: int
    exceed_rate: dict
    errors: np.ndarray  # raw per-replicate error norms (not serialized)


@dataclass
class VetoRow:
    """Paired known-delta / estimated-delta comparison at one delta."""

    delta: float
    mse_known: float
    mse_estimated: float
    ratio: float
    hit_rate: float
    mse_oracle: float
    m: int
    rep_count: int
    errors_known: np.ndarray
    errors_estimated: np.ndarray


def _effective_schedule(cfg: ExperimentConfig, op: DiscreteOperator) -> LevelSchedule:
    # levels can never exceed the data's fine grid
    return cfg.schedule.with_n_max(min(cfg.schedule.n_max, op.n))


def _lepskii_template(cfg: ExperimentConfig, op: DiscreteOperator, delta: float) -> LepskiiConfig:
    return LepskiiConfig(
        q=cfg.lepskii_q, C_psi=cfg.lepskii_c_psi, max_alpha=op.norm**2, delta_input=delta
    )


def _summarize(delta, method, err_vectors, epsilons, x_norm) -> MseRow:
    errs = np.array([float(np.linalg.norm(v)) for v in err_vectors])
    mean_vec = np.mean(err_vectors, axis=0)
    mse_sq = float(np.mean(errs**2))
    bias_sq = float(np.sum(mean_vec**2))
    exceed = {eps: float(np.mean(errs > eps * x_norm)) for eps in epsilons}
    return MseRow(
        delta=float(delta),
        method=method,
        mc_mse=float(np.sqrt(mse_sq)),
        mc_bias_sq=bias_sq,
        mc_variance=mse_sq - bias_sq,
        rep_count=len(errs),
        exceed_rate=exceed,
        errors=errs,
    )


def run_mse_study(cfg: ExperimentConfig) -> list:
    """Monte Carlo error of one parameter-choice method along delta_list.

    This is an empirical surrogate for stochastic convergence: it samples
    one noise sequence per replicate along finitely many noise levels, it
    does not quantify over all admissible sequences.
    """
    op = build_operator(cfg)
    x_true = build_signal(cfg, op)
    sched = _effective_schedule(cfg, op)
    spec = build_noise_spec(cfg, op.grid)
    filt = tikhonov()
    cache = LevelSolverCache(op)
    rows = []
    for di, delta in enumerate(cfg.delta_list):
        err_vectors = []
        for rep in range(cfg.replicates):
            obs = observe(op, x_true, delta, spec, replicate=(di, rep))
            x_hat = _choose(cfg, op, x_true, obs, filt, sched, cache, delta)
            err_vectors.append(x_true.coeffs - x_hat.coeffs)
        rows.append(_summarize(delta, cfg.method, err_vectors, cfg.epsilons, x_true.norm()))
    return rows


def _choose(cfg, op, x_true, obs, filt, sched, cache, delta) -> L2Vector:
    if cfg.method == "oracle":
        alphas = _lepskii_template(cfg, op, delta).alphas
        alpha, _ = oracle_choice(op, x_true, obs, filt, alphas)
        return regularize_svd(filt, op, obs.coeffs, alpha).x_alpha
    if cfg.method == "discrepancy":
        alphas = _lepskii_template(cfg, op, delta).alphas
        result = discrepancy_principle(op, obs, filt, cfg.tau_dp, alphas)
        return regularize_svd(filt, op, obs.coeffs, result.alpha).x_alpha
    if cfg.method == "lepskii_known_delta":
        lep = lepskii_choose(op, obs, _lepskii_template(cfg, op, delta), sched, cache=cache)
        return lep.x_star
    # lepskii_estimated_delta
    _, _, x_final = data_driven_choose(
        op, LevelData(obs), cfg.estimator, _lepskii_template(cfg, op, delta), sched, cache=cache
    )
    return x_final


@dataclass
class BiasVarianceReport:
    """Monte Carlo check of mse^2 = bias^2 + delta^2 E||R_alpha Xi||^2."""

    alpha: float
    delta: float
    replicates: int
    bias_sq: float
    v_hat: float
    mse_sq: float
    identity_gap: float
    standard_error: float
    within_4se: bool
    v_bound: float
    bound_ok: bool


def run_bias_variance_check(
    op: DiscreteOperator,
    x_true: L2Vector,
    filt: Filter,
    alpha: float,
    delta: float,
    replicates: int,
    seed: int,
) -> BiasVarianceReport:
    """Verify the decomposition under white noise with a paired estimator.

    The identity is exact in expectation; the Monte Carlo discrepancy
    D_i = ||bias - delta R_alpha xi_i||^2 - delta^2 ||R_alpha xi_i||^2 has
    mean bias^2, and the report checks |mean(D) - bias^2| <= 4 SE(D).
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    y = apply(op, x_true).coeffs
    bias_vec = x_true.coeffs - regularize_svd(filt, op, y, alpha).x_alpha.coeffs
    bias_sq = float(np.sum(bias_vec**2))
    spec = NoiseSpec.gaussian_white(seed)
    r = op.rank
    weights = filter_value(filt, alpha, op.s[:r] ** 2) * op.s[:r]
    d_samples = np.empty(replicates)
    v_samples = np.empty(replicates)
    for rep in range(replicates):
        xi = draw_noise(spec, op.grid, rep)
        r_xi = op.vt[:r].T @ (weights * (op.u[:, :r].T @ xi))
        err_sq = float(np.sum((bias_vec - delta * r_xi) ** 2))
        v_samples[rep] = float(np.sum(r_xi**2))
        d_samples[rep] = err_sq - delta**2 * v_samples[rep]
    v_hat = float(np.mean(v_samples))
    mse_sq = float(np.mean(d_samples + delta**2 * v_samples))
    gap = abs(float(np.mean(d_samples)) - bias_sq)
    se = float(np.std(d_samples, ddof=1) / np.sqrt(replicates)) if replicates > 1 else 0.0
    # rounding floor: the paired gap cannot be resolved below machine noise
    fp_floor = 1e-12 * (bias_sq + delta**2 * v_hat)
    bound = variance_bound(filt, op, alpha)
    return BiasVarianceReport(
        alpha=float(alpha),
        delta=float(delta),
        replicates=replicates,
        bias_sq=bias_sq,
        v_hat=v_hat,
        mse_sq=mse_sq,
        identity_gap=gap,
        standard_error=se,
        within_4se=gap <= 4.0 * se + fp_floor,
        v_bound=bound,
        bound_ok=v_hat <= bound,
    )


def run_veto_study(cfg: ExperimentConfig) -> list:
    """Paired comparison of the known-delta and purely data-driven pipelines.

    Both pipelines see the identical realization per replicate; the oracle
    column is the per-replicate error minimum over the known-delta grid.
    """
    op = build_operator(cfg)
    x_true = build_signal(cfg, op)
    sched = _effective_schedule(cfg, op)
    spec = build_noise_spec(cfg, op.grid)
    cache = LevelSolverCache(op)
    est = cfg.estimator
    rows = []
    for di, delta in enumerate(cfg.delta_list):
        template = _lepskii_template(cfg, op, delta)
        e_known = np.empty(cfg.replicates)
        e_est = np.empty(cfg.replicates)
        e_orc = np.empty(cfg.replicates)
        hits = 0
        for rep in range(cfg.replicates):
            obs = observe(op, x_true, delta, spec, replicate=(di, rep))
            known = lepskii_choose(op, obs, template, sched, cache=cache)
            e_known[rep] = np.linalg.norm(x_true.coeffs - known.x_star.coeffs)
            e_orc[rep] = min(
                np.linalg.norm(x_true.coeffs - x.coeffs) for x in known.solutions
            )
            estimate, lep, x_final = data_driven_choose(
                op, LevelData(obs), est, template, sched, cache=cache
            )
            e_est[rep] = np.linalg.norm(x_true.coeffs - x_final.coeffs)
            if delta <= estimate.delta_hat <= est.K * est.tau * delta:
                hits += 1
        mse_known = float(np.sqrt(np.mean(e_known**2)))
        mse_est = float(np.sqrt(np.mean(e_est**2)))
        rows.append(
            VetoRow(
                delta=float(delta),
                mse_known=mse_known,
                mse_estimated=mse_est,
                ratio=mse_est / mse_known,
                hit_rate=hits / cfg.replicates,
                mse_oracle=float(np.sqrt(np.mean(e_orc**2))),
                m=template.m,
                rep_count=cfg.replicates,
                errors_known=e_known,
                errors_estimated=e_est,
            )
        )
    return rows


def write_mse_csv(rows: Sequence[MseRow], path) -> None:
    eps_keys = sorted(rows[0].exceed_rate, reverse=True) if rows else []
    with open(path, "w", encoding="ascii") as fh:
        header = "delta,method,mc_mse,mc_bias_sq,mc_variance,rep_count"
        header += "".join(f",exceed_{format(e, 'g')}" for e in eps_keys)
        fh.write(header + "\n")
        for row in rows:
            cells = [
                _fmt(row.delta),
                row.method,
                _fmt(row.mc_mse),
                _fmt(row.mc_bias_sq),
                _fmt(row.mc_variance),
                str(row.rep_count),
            ]
            cells += [_fmt(row.exceed_rate[e]) for e in eps_keys]
            fh.write(",".join(cells) + "\n")


def write_veto_csv(rows: Sequence[VetoRow], path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("delta,mse_known,mse_estimated,ratio,hit_rate,mse_oracle,m,rep_count\n")
        for row in rows:
            fh.write(
                ",".join(
                    [
                        _fmt(row.delta),
                        _fmt(row.mse_known),
                        _fmt(row.mse_estimated),
                        _fmt(row.ratio),
                        _fmt(row.hit_rate),
                        _fmt(row.mse_oracle),
                        str(row.m),
                        str(row.rep_count),
                    ]
                )
                + "\n"
            )
