"""Scenario generation, transmission schemes, and Monte-Carlo aggregation.

Schemes over one user drop:

  no_steering   fixed downward beam (alpha=270, beta=0) at the default
                directivity, full power, TDMA 1/K.
  sbs           steered beam, directivity pinned to the default value.
  sbsf          steered beam, directivity optimized over its full range.
  ga_fbs        genie upper bound: the beam re-points exactly at each
                user within its own slot, with zero settling time.

With more than one beam, users are clustered (one beam per cluster,
power p/N each) and evaluated in one of two stream models:

  single stream   all beams carry the same waveform; per-user gains add,
                  no interference, TDMA over all K users.
  multi stream    each beam carries its own stream; other beams are
                  electrical-domain interference, TDMA within the cluster.

Scheme tokens accept a _single / _multi suffix (e.g. "sbsf_multi") to
pick the stream model per scheme; otherwise the scenario's stream_mode
applies.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import BeamConfig, PhyParams, UserPose, los_gain, rates_from_gains, user_rate
from .clustering import ClusterState, vuc_cluster
from .geometry import pointing_angles
from .optimizer import (
    GridSpec,
    InfeasibleError,
    MMParams,
    build_gain_grid,
    equal_time_allocation,
    solve_exhaustive,
    solve_mm,
)

SCHEME_BASES = ("no_steering", "sbs", "sbsf", "ga_fbs")


@dataclass(frozen=True)
class ScenarioConfig:
    """Room, PHY, solver, and Monte-Carlo controls for one experiment point."""

    room: tuple = (8.0, 8.0, 4.0)
    ap_position: tuple = (4.0, 4.0, 4.0)
    n_users: int = 1
    n_beams: int = 1
    user_height: float = 0.85
    user_orientation: tuple = (0.0, 0.0, 1.0)
    phy: PhyParams = field(default_factory=PhyParams)
    grid: GridSpec = field(default_factory=GridSpec)
    mm: MMParams = field(default_factory=MMParams)
    schemes: tuple = ("no_steering", "sbs", "sbsf", "ga_fbs")
    stream_mode: str = "multi"
    default_gamma: float = 5.0
    trials: int = 500
    seed: int = 0
    solver: str = "exhaustive"
    ga_fbs_focused: bool = True
    vuc_max_iters: int = 50

    def __post_init__(self):
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.n_beams < 1:
            raise ValueError("n_beams must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not all(0.0 <= self.ap_position[i] <= self.room[i] for i in range(3)):
            raise ValueError("AP must sit inside the room")
        if not 0.0 <= self.user_height < self.room[2]:
            raise ValueError("user_height must lie below the ceiling")
        if self.stream_mode not in ("single", "multi"):
            raise ValueError("stream_mode must be 'single' or 'multi'")
        if self.solver not in ("exhaustive", "mm"):
            raise ValueError("solver must be 'exhaustive' or 'mm'")

    @property
    def sbs_grid(self) -> GridSpec:
        """Steering-only grid: directivity pinned to the default value."""
        return replace(self.grid, gamma_min=self.default_gamma, gamma_max=self.default_gamma)


@dataclass(frozen=True)
class SchemeResult:
    """Outcome of one scheme on one user drop."""

    scheme: str
    delivered_rates: np.ndarray  # tau_k * R_k, bit/s
    sum_rate: float
    sum_log_objective: float  # sum_k ln(R_k) of the full per-user rates
    beams: tuple
    assignments: tuple | None = None


@dataclass(frozen=True)
class AggregateResult:
    """Monte-Carlo aggregate of one scheme at one experiment point."""

    scheme: str
    n_users: int
    n_beams: int
    trials: int
    seed: int
    mean_sum_rate: float
    std_sum_rate: float
    sum_rates: np.ndarray
    per_user_rates: np.ndarray
    n_infeasible: int = 0


def generate_users(config: ScenarioConfig, rng: np.random.Generator) -> list:
    """K receivers at uniform random floor positions, fixed height, shared orientation."""
    orient = np.asarray(config.user_orientation, dtype=float)
    orient = orient / np.linalg.norm(orient)
    xs = rng.uniform(0.0, config.room[0], config.n_users)
    ys = rng.uniform(0.0, config.room[1], config.n_users)
    return [
        UserPose(position=np.array([x, y, config.user_height]), orientation=orient)
        for x, y in zip(xs, ys)
    ]


def _single_beam_result(scheme, users, config, grid, beam) -> SchemeResult:
    idx = grid.index_of(beam)
    full_rates = rates_from_gains(grid.gains[:, idx], config.phy)
    with np.errstate(divide="ignore"):
        objective = float(np.sum(np.log(full_rates)))
    tau = equal_time_allocation(len(users))
    delivered = tau * full_rates
    return SchemeResult(
        scheme=scheme,
        delivered_rates=delivered,
        sum_rate=float(delivered.sum()),
        sum_log_objective=objective,
        beams=(beam,),
    )


def run_no_steering(users: list, config: ScenarioConfig) -> SchemeResult:
    """Fixed downward beam at the default directivity index, full power."""
    spec = replace(
        config.sbs_grid, alpha_min=270.0, alpha_max=270.0, beta_step=360.0
    )  # single grid point (270, 0, default_gamma)
    grid = build_gain_grid(config.ap_position, users, spec, config.phy.A_r)
    return _single_beam_result("no_steering", users, config, grid, grid.beam_at(0))


def _run_steered(scheme, users, config, spec) -> SchemeResult:
    grid = build_gain_grid(config.ap_position, users, spec, config.phy.A_r)
    if config.solver == "mm":
        beam, _ = solve_mm(grid, config.phy, config.mm)
    else:
        beam, _ = solve_exhaustive(grid, config.phy)
    return _single_beam_result(scheme, users, config, grid, beam)


def run_sbs(users: list, config: ScenarioConfig) -> SchemeResult:
    """Steered beam with the directivity index pinned to the default."""
    return _run_steered("sbs", users, config, config.sbs_grid)


def run_sbsf(users: list, config: ScenarioConfig) -> SchemeResult:
    """Steered beam with directivity optimized over its full range."""
    return _run_steered("sbsf", users, config, config.grid)


def run_ga_fbs(users: list, config: ScenarioConfig) -> SchemeResult:
    """Genie-aided fast steering: exact per-slot pointing, zero settling loss.

    Each user's slot gets a beam aimed exactly at that user; on-axis the
    gain grows with the directivity index, so the focused variant uses
    gamma_max (a fixed-gamma variant is selectable via ga_fbs_focused).
    """
    phy = config.phy
    gamma = config.grid.gamma_max if config.ga_fbs_focused else config.default_gamma
    ap = np.asarray(config.ap_position, dtype=float)
    beams = []
    full_rates = np.empty(len(users))
    for k, user in enumerate(users):
        alpha, beta = pointing_angles(user.position - ap)
        beam = BeamConfig(alpha_deg=alpha, beta_deg=beta, gamma=gamma)
        beams.append(beam)
        full_rates[k] = user_rate(los_gain(ap, beam, user, phy.A_r), phy)
    with np.errstate(divide="ignore"):
        objective = float(np.sum(np.log(full_rates)))
    delivered = full_rates / len(users)
    return SchemeResult(
        scheme="ga_fbs",
        delivered_rates=delivered,
        sum_rate=float(delivered.sum()),
        sum_log_objective=objective,
        beams=tuple(beams),
    )


def evaluate_multibeam(
    users: list,
    state: ClusterState,
    config: ScenarioConfig,
    stream_mode: str | None = None,
) -> SchemeResult:
    """Rates for a clustered multi-beam configuration under a stream model."""
    mode = stream_mode or config.stream_mode
    phy = config.phy
    p_beam = phy.p / config.n_beams  # power split over the configured LED count
    noise = phy.N0 * phy.B
    n_users = len(users)

    if mode == "single":
        # identical waveform on every beam: amplitudes add, no interference
        h_total = state.gains.sum(axis=1)
        snr = (phy.r * p_beam * h_total) ** 2 / noise
        full_rates = phy.B * np.log2(1.0 + snr)
        tau = equal_time_allocation(n_users)
    elif mode == "multi":
        beam_of = np.empty(n_users, dtype=int)
        cluster_size = np.zeros(n_users)
        for n, members in enumerate(state.assignments):
            for k in members:
                beam_of[k] = n
                cluster_size[k] = len(members)
        powers = (phy.r * p_beam * state.gains) ** 2  # (K, N) electrical powers
        signal = powers[np.arange(n_users), beam_of]
        interference = powers.sum(axis=1) - signal
        sinr = signal / (noise + interference)
        full_rates = phy.B * np.log2(1.0 + sinr)
        tau = 1.0 / cluster_size
    else:
        raise ValueError("stream_mode must be 'single' or 'multi'")

    with np.errstate(divide="ignore"):
        objective = float(np.sum(np.log(full_rates)))
    delivered = tau * full_rates
    return SchemeResult(
        scheme=f"multibeam_{mode}",
        delivered_rates=delivered,
        sum_rate=float(delivered.sum()),
        sum_log_objective=objective,
        beams=state.beams,
        assignments=state.assignments,
    )


def parse_scheme(token: str) -> tuple[str, str | None]:
    """Split a scheme token into (base, stream-mode override)."""
    name = token.strip().lower()
    if name == "none":
        name = "no_steering"
    mode = None
    for suffix, m in (("_single", "single"), ("_multi", "multi")):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
            mode = m
    if name == "none":
        name = "no_steering"
    if name not in SCHEME_BASES:
        raise ValueError(f"unknown scheme {token!r}")
    return name, mode


def run_scheme(
    token: str,
    users: list,
    config: ScenarioConfig,
    rng: np.random.Generator | None = None,
) -> SchemeResult:
    """Dispatch one scheme token on one user drop."""
    base, mode = parse_scheme(token)
    if base == "no_steering":
        result = run_no_steering(users, config)
    elif base == "ga_fbs":
        result = run_ga_fbs(users, config)
    elif config.n_beams == 1:
        result = run_sbs(users, config) if base == "sbs" else run_sbsf(users, config)
    else:
        spec = config.sbs_grid if base == "sbs" else config.grid
        state = vuc_cluster(
            config.ap_position,
            users,
            min(config.n_beams, len(users)),
            spec,
            config.phy,
            max_iters=config.vuc_max_iters,
            method=config.solver,
            mm=config.mm,
            rng=rng,
            power_shares=config.n_beams,
        )
        result = evaluate_multibeam(users, state, config, mode)
    return replace(result, scheme=token)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent per-trial stream derived from (master seed, trial index)."""
    return np.random.default_rng(np.random.SeedSequence((seed, trial)))


def monte_carlo(config: ScenarioConfig, scheme: str | None = None) -> AggregateResult:
    """Run one scheme over `trials` independent seeded user drops.

    Infeasible drops (a user dark at every grid point) are counted and
    excluded from the averages.
    """
    token = scheme if scheme is not None else config.schemes[0]
    sum_rates = []
    per_user = []
    n_infeasible = 0
    for trial in range(config.trials):
        rng = trial_rng(config.seed, trial)
        users = generate_users(config, rng)
        try:
            result = run_scheme(token, users, config, rng)
        except InfeasibleError:
            n_infeasible += 1
            continue
        sum_rates.append(result.sum_rate)
        per_user.append(result.delivered_rates)
    sum_rates = np.asarray(sum_rates)
    per_user = np.concatenate(per_user) if per_user else np.empty(0)
    mean = float(sum_rates.mean()) if sum_rates.size else math.nan
    std = float(sum_rates.std(ddof=1)) if sum_rates.size > 1 else 0.0
    return AggregateResult(
        scheme=token,
        n_users=config.n_users,
        n_beams=config.n_beams,
        trials=int(sum_rates.size),
        seed=config.seed,
        mean_sum_rate=mean,
        std_sum_rate=std,
        sum_rates=sum_rates,
        per_user_rates=per_user,
        n_infeasible=n_infeasible,
    )


def rates_to_db(rates: np.ndarray) -> np.ndarray:
    """Rates in dB: 20 log10(R)."""
    return 20.0 * np.log10(np.asarray(rates, dtype=float))
