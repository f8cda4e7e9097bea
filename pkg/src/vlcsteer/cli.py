"""Command-line front end: parse scenario files, run experiments, emit CSVs.

Config files are flat `key = value` text; `#` starts a comment.  Every key
is optional and defaults to the standard scenario (8 x 8 x 4 m room, AP
center-ceiling, 1 W, 20 MHz, alpha in [200, 340] deg, gamma in [1, 15]).
The bundled presets fig3a, fig3b, fig3c and fig4 can be passed in place
of a config path.

Outputs per run: one CSV per scheme (sweep_value, mean_sum_rate_bps,
std_sum_rate_bps, trials, seed), one empirical-CDF file per scheme and
sweep point (rate_db, cumulative_probability), and a manifest.txt with
the fully resolved configuration.  All outputs are deterministic for a
fixed seed.  Plotting is left to external tools.
"""

import argparse
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .channel import PhyParams
from .optimizer import GridSpec, MMParams
from .simulation import ScenarioConfig, monte_carlo, parse_scheme, rates_to_db

OUTPUT_DIR_ENV = "VLCSTEER_OUT"


class ConfigError(ValueError):
    """Malformed or out-of-range experiment configuration."""


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_schemes(text: str) -> tuple:
    tokens = tuple(t.strip() for t in text.split(",") if t.strip())
    if not tokens:
        raise ValueError("empty scheme list")
    for t in tokens:
        parse_scheme(t)  # validates
    return tokens


# key -> caster; None-valued defaults are derived after parsing
_KEYS = {
    "room_x": float,
    "room_y": float,
    "room_z": float,
    "ap_x": float,
    "ap_y": float,
    "ap_z": float,
    "n_users": int,
    "n_beams": int,
    "user_height": float,
    "user_orient_x": float,
    "user_orient_y": float,
    "user_orient_z": float,
    "tx_power_w": float,
    "responsivity_a_per_w": float,
    "bandwidth_hz": float,
    "noise_psd_a2_hz": float,
    "receiver_area_m2": float,
    "alpha_min_deg": float,
    "alpha_max_deg": float,
    "alpha_step_deg": float,
    "beta_step_deg": float,
    "gamma_min": float,
    "gamma_max": float,
    "gamma_step": float,
    "default_gamma": float,
    "mm_lambda": float,
    "mm_q": float,
    "mm_epsilon": float,
    "mm_max_outer": int,
    "mm_max_inner": int,
    "mm_tol": float,
    "mm_inner_tol": float,
    "mm_max_stages": int,
    "mm_sparsity_target": float,
    "schemes": _parse_schemes,
    "stream_mode": str,
    "solver": str,
    "trials": int,
    "seed": int,
    "ga_fbs_focused": _parse_bool,
    "vuc_max_iters": int,
}


def parse_config_text(text: str) -> ScenarioConfig:
    """Build a fully validated ScenarioConfig from flat key = value text."""
    items = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in items:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            items[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{key}: invalid value {value!r} ({exc})") from None
    return config_from_items(items)


def config_from_items(items: dict) -> ScenarioConfig:
    """Assemble the nested config; diagnostics name the offending key."""
    defaults = ScenarioConfig()

    def get(key, fallback):
        return items.get(key, fallback)

    room = (get("room_x", 8.0), get("room_y", 8.0), get("room_z", 4.0))
    # AP defaults to the room center at ceiling level
    ap = (get("ap_x", room[0] / 2.0), get("ap_y", room[1] / 2.0), get("ap_z", room[2]))
    orient = (get("user_orient_x", 0.0), get("user_orient_y", 0.0), get("user_orient_z", 1.0))
    if all(c == 0.0 for c in orient):
        raise ConfigError("user_orient_x/y/z: orientation must be non-zero")

    try:
        phy = PhyParams(
            p=get("tx_power_w", 1.0),
            r=get("responsivity_a_per_w", 1.0),
            B=get("bandwidth_hz", 20e6),
            N0=get("noise_psd_a2_hz", 2.5e-20),
            A_r=get("receiver_area_m2", 1e-4),
        )
    except ValueError as exc:
        raise ConfigError(f"tx_power_w/responsivity_a_per_w/bandwidth_hz/"
                          f"noise_psd_a2_hz/receiver_area_m2: {exc}") from None

    gamma_min = get("gamma_min", 1.0)
    gamma_max = get("gamma_max", 15.0)
    if gamma_max < gamma_min:
        raise ConfigError(f"gamma_max: range error, gamma_min = {gamma_min} > gamma_max = {gamma_max}")
    alpha_min = get("alpha_min_deg", 200.0)
    alpha_max = get("alpha_max_deg", 340.0)
    if alpha_max < alpha_min:
        raise ConfigError(f"alpha_max_deg: range error, alpha_min_deg = {alpha_min} > alpha_max_deg = {alpha_max}")
    try:
        grid = GridSpec(
            alpha_min=alpha_min,
            alpha_max=alpha_max,
            alpha_step=get("alpha_step_deg", 2.0),
            beta_step=get("beta_step_deg", 2.0),
            gamma_min=gamma_min,
            gamma_max=gamma_max,
            gamma_step=get("gamma_step", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"alpha/beta/gamma grid: {exc}") from None

    try:
        mm = MMParams(
            lam=get("mm_lambda", defaults.mm.lam),
            q=get("mm_q", defaults.mm.q),
            epsilon=get("mm_epsilon", defaults.mm.epsilon),
            max_outer=get("mm_max_outer", defaults.mm.max_outer),
            max_inner=get("mm_max_inner", defaults.mm.max_inner),
            tol=get("mm_tol", defaults.mm.tol),
            inner_tol=get("mm_inner_tol", defaults.mm.inner_tol),
            max_stages=get("mm_max_stages", defaults.mm.max_stages),
            sparsity_target=get("mm_sparsity_target", defaults.mm.sparsity_target),
        )
    except ValueError as exc:
        raise ConfigError(f"mm_lambda/mm_q/mm_epsilon: {exc}") from None

    default_gamma = get("default_gamma", 5.0)
    if not gamma_min <= default_gamma <= gamma_max:
        raise ConfigError(f"default_gamma: {default_gamma} outside [gamma_min, gamma_max]")

    try:
        return ScenarioConfig(
            room=room,
            ap_position=ap,
            n_users=get("n_users", 1),
            n_beams=get("n_beams", 1),
            user_height=get("user_height", 0.85),
            user_orientation=orient,
            phy=phy,
            grid=grid,
            mm=mm,
            schemes=get("schemes", defaults.schemes),
            stream_mode=get("stream_mode", "multi"),
            default_gamma=default_gamma,
            trials=get("trials", 500),
            seed=get("seed", 0),
            solver=get("solver", "exhaustive"),
            ga_fbs_focused=get("ga_fbs_focused", True),
            vuc_max_iters=get("vuc_max_iters", 50),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path: str) -> ScenarioConfig:
    """Parse a config file; an empty file yields the all-defaults scenario."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    return parse_config_text(text)


def serialize_config(config: ScenarioConfig) -> str:
    """Canonical flat text for a config; parses back to an equal config."""
    lines = [
        f"room_x = {config.room[0]!r}",
        f"room_y = {config.room[1]!r}",
        f"room_z = {config.room[2]!r}",
        f"ap_x = {config.ap_position[0]!r}",
        f"ap_y = {config.ap_position[1]!r}",
        f"ap_z = {config.ap_position[2]!r}",
        f"n_users = {config.n_users}",
        f"n_beams = {config.n_beams}",
        f"user_height = {config.user_height!r}",
        f"user_orient_x = {config.user_orientation[0]!r}",
        f"user_orient_y = {config.user_orientation[1]!r}",
        f"user_orient_z = {config.user_orientation[2]!r}",
        f"tx_power_w = {config.phy.p!r}",
        f"responsivity_a_per_w = {config.phy.r!r}",
        f"bandwidth_hz = {config.phy.B!r}",
        f"noise_psd_a2_hz = {config.phy.N0!r}",
        f"receiver_area_m2 = {config.phy.A_r!r}",
        f"alpha_min_deg = {config.grid.alpha_min!r}",
        f"alpha_max_deg = {config.grid.alpha_max!r}",
        f"alpha_step_deg = {config.grid.alpha_step!r}",
        f"beta_step_deg = {config.grid.beta_step!r}",
        f"gamma_min = {config.grid.gamma_min!r}",
        f"gamma_max = {config.grid.gamma_max!r}",
        f"gamma_step = {config.grid.gamma_step!r}",
        f"default_gamma = {config.default_gamma!r}",
        f"mm_lambda = {config.mm.lam!r}",
        f"mm_q = {config.mm.q!r}",
        f"mm_epsilon = {config.mm.epsilon!r}",
        f"mm_max_outer = {config.mm.max_outer}",
        f"mm_max_inner = {config.mm.max_inner}",
        f"mm_tol = {config.mm.tol!r}",
        f"mm_inner_tol = {config.mm.inner_tol!r}",
        f"mm_max_stages = {config.mm.max_stages}",
        f"mm_sparsity_target = {config.mm.sparsity_target!r}",
        f"schemes = {','.join(config.schemes)}",
        f"stream_mode = {config.stream_mode}",
        f"solver = {config.solver}",
        f"trials = {config.trials}",
        f"seed = {config.seed}",
        f"ga_fbs_focused = {'true' if config.ga_fbs_focused else 'false'}",
        f"vuc_max_iters = {config.vuc_max_iters}",
    ]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Preset:
    text: str
    sweep_var: str | None
    sweep_range: tuple | None


PRESETS = {
    # single steerable beam, 1..6 users, the four single-beam schemes
    "fig3a": Preset(
        text="n_beams = 1\nschemes = no_steering,sbs,sbsf,ga_fbs\ntrials = 500\n",
        sweep_var="users",
        sweep_range=(1, 6),
    ),
    # three independently steerable beams at p/3 each, 1..6 users
    "fig3b": Preset(
        text=(
            "n_beams = 3\n"
            "schemes = no_steering,sbs_single,sbs_multi,sbsf_single,sbsf_multi\n"
            "trials = 500\n"
        ),
        sweep_var="users",
        sweep_range=(1, 6),
    ),
    # ten users, 1..10 beams at p/N each
    "fig3c": Preset(
        text=(
            "n_users = 10\n"
            "schemes = no_steering,sbs_single,sbs_multi,sbsf_single,sbsf_multi\n"
            "trials = 500\n"
        ),
        sweep_var="beams",
        sweep_range=(1, 10),
    ),
    # per-user rate CDFs with three beams and six users
    "fig4": Preset(
        text="n_users = 6\nn_beams = 3\nschemes = no_steering,sbsf_multi\ntrials = 500\n",
        sweep_var=None,
        sweep_range=None,
    ),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One CLI invocation: config source plus command-line overrides."""

    source: str
    sweep_var: str | None = None
    sweep_range: tuple | None = None
    schemes: tuple | None = None
    out_dir: str | None = None
    seed: int | None = None
    trials: int | None = None
    solver: str | None = None
    verbose: bool = False


def _resolve(spec: ExperimentSpec):
    """Spec -> (config, sweep_var, sweep_values, preset name or None)."""
    preset_name = None
    if spec.source in PRESETS:
        preset_name = spec.source
        preset = PRESETS[spec.source]
        config = parse_config_text(preset.text)
        sweep_var, sweep_range = preset.sweep_var, preset.sweep_range
    else:
        config = parse_config(spec.source)
        sweep_var, sweep_range = None, None
    if spec.sweep_var is not None:
        sweep_var = spec.sweep_var
        sweep_range = spec.sweep_range
    elif spec.sweep_range is not None:
        if sweep_var is None:
            raise ConfigError("--range requires --sweep users|beams")
        sweep_range = spec.sweep_range
    if sweep_var is not None and sweep_range is None:
        raise ConfigError("--sweep requires --range a..b")
    if sweep_var not in (None, "users", "beams"):
        raise ConfigError(f"sweep: unknown variable {sweep_var!r}")

    overrides = {}
    if spec.seed is not None:
        overrides["seed"] = spec.seed
    if spec.trials is not None:
        if spec.trials < 1:
            raise ConfigError("trials: must be >= 1")
        overrides["trials"] = spec.trials
    if spec.solver is not None:
        if spec.solver not in ("exhaustive", "mm"):
            raise ConfigError(f"solver: unknown solver {spec.solver!r}")
        overrides["solver"] = spec.solver
    if spec.schemes is not None:
        for token in spec.schemes:
            try:
                parse_scheme(token)
            except ValueError as exc:
                raise ConfigError(f"schemes: {exc}") from None
        overrides["schemes"] = tuple(spec.schemes)
    if overrides:
        config = replace(config, **overrides)

    if sweep_range is not None:
        lo, hi = sweep_range
        if lo < 1 or hi < lo:
            raise ConfigError(f"range: bad sweep range {lo}..{hi}")
        values = list(range(lo, hi + 1))
    else:
        values = [None]
    return config, sweep_var, values, preset_name


def _point_config(config: ScenarioConfig, sweep_var, value) -> ScenarioConfig:
    if value is None:
        return config
    if sweep_var == "users":
        return replace(config, n_users=value)
    return replace(config, n_beams=value)


def _write_csv(path: str, header: str, rows: list):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _cdf_rows(rates_bps: np.ndarray) -> list:
    db = np.sort(rates_to_db(rates_bps))
    n = db.size
    return [[repr(float(db[i])), repr((i + 1) / n)] for i in range(n)]


def run_experiment(spec: ExperimentSpec) -> int:
    """Execute one experiment; returns the process exit code."""
    try:
        config, sweep_var, values, preset_name = _resolve(spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        out_dir = spec.out_dir or os.environ.get(OUTPUT_DIR_ENV) or "vlcsteer_out"
        os.makedirs(out_dir, exist_ok=True)
        var_label = sweep_var if sweep_var is not None else "point"
        for token in config.schemes:
            rows = []
            for value in values:
                cfg = _point_config(config, sweep_var, value)
                agg = monte_carlo(cfg, token)
                point = value if value is not None else cfg.n_users
                rows.append(
                    [
                        str(point),
                        repr(agg.mean_sum_rate),
                        repr(agg.std_sum_rate),
                        str(agg.trials),
                        str(agg.seed),
                    ]
                )
                if spec.verbose:
                    print(
                        f"{token} {var_label}={point}: mean sum rate "
                        f"{agg.mean_sum_rate:.4e} bit/s over {agg.trials} trials"
                        + (f" ({agg.n_infeasible} infeasible)" if agg.n_infeasible else "")
                    )
                _write_csv(
                    os.path.join(out_dir, f"cdf_{token}_{var_label}{point}.csv"),
                    "rate_db,cumulative_probability",
                    _cdf_rows(agg.per_user_rates),
                )
            _write_csv(
                os.path.join(out_dir, f"{token}.csv"),
                "sweep_value,mean_sum_rate_bps,std_sum_rate_bps,trials,seed",
                rows,
            )
        _write_manifest(os.path.join(out_dir, "manifest.txt"), config, spec, sweep_var, values, preset_name)
        return 0
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _write_manifest(path, config, spec, sweep_var, values, preset_name):
    lines = ["# vlcsteer run manifest", ""]
    if preset_name:
        lines.append(f"preset = {preset_name}")
    lines.append(f"source = {spec.source}")
    if sweep_var is not None:
        lines.append(f"sweep = {sweep_var} {values[0]}..{values[-1]}")
    else:
        lines.append("sweep = none")
    lines += ["", "# resolved scenario", serialize_config(config)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))


def _parse_range(text: str) -> tuple:
    parts = text.split("..")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected a..b")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError("expected integer bounds a..b") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlcsteer",
        description="Beam steering experiments for multi-user indoor VLC",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a config file or preset")
    run.add_argument("config", help="config file path or preset name "
                                    f"({', '.join(sorted(PRESETS))})")
    run.add_argument("--sweep", choices=("users", "beams"), help="sweep variable")
    run.add_argument("--range", dest="sweep_range", type=_parse_range, metavar="A..B",
                     help="sweep range, inclusive")
    run.add_argument("--schemes", help="comma-separated scheme list override")
    run.add_argument("--seed", type=int, help="seed override")
    run.add_argument("--out", help=f"output directory (or ${OUTPUT_DIR_ENV})")
    run.add_argument("--trials", type=int, help="Monte-Carlo trials per point")
    run.add_argument("--solver", choices=("exhaustive", "mm"), help="grid solver")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    schemes = None
    if args.schemes:
        schemes = tuple(t.strip() for t in args.schemes.split(",") if t.strip())
    spec = ExperimentSpec(
        source=args.config,
        sweep_var=args.sweep,
        sweep_range=args.sweep_range,
        schemes=schemes,
        out_dir=args.out,
        seed=args.seed,
        trials=args.trials,
        solver=args.solver,
        verbose=args.verbose,
    )
    return run_experiment(spec)


if __name__ == "__main__":
    sys.exit(main())
