"""Command line front end.

Subcommands:
  cir       tabulate the pulse and worst-case interference shapes per size
  optimize  design a minimal mixture for a detection window
  sweep     trade window length against the interference threshold
  validate  check the pulse model against a Brownian motion simulation

Configuration is layered: built-in defaults, then a JSON config file
(--config), then command line flags. The effective configuration is echoed
to effective_config.json in the output directory and its hash is stamped
into every output file, so results are traceable to their inputs. Outputs
carry no timestamps and all floats are written with full precision, which
makes reruns byte-identical.

Exit codes: 0 success, 2 design infeasible, 3 configuration error, 4 I/O
error. argparse's own exit code for bad flags would collide with 2, so
parser errors are rerouted through ConfigError.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ChannelParams, ParticleSet, analytic_bounds, cir_eval
from .mcvalidate import McConfig, simulate_cir, validate_cir
from .optimizer import DetectionSpec, optimize_mixture, single_size_benchmark, sweep_tradeoff
from .signal import sample_matrices

__all__ = [
    "ConfigError",
    "EXIT_OK",
    "EXIT_INFEASIBLE",
    "EXIT_CONFIG",
    "EXIT_IO",
    "main",
    "cmd_cir",
    "cmd_optimize",
    "cmd_sweep",
    "cmd_validate",
]

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3
EXIT_IO = 4


class ConfigError(ValueError):
    """Invalid configuration (bad flag, bad file, bad value)."""


class _Parser(argparse.ArgumentParser):
    # default argparse behavior exits with code 2, which is reserved here
    def error(self, message):
        raise ConfigError(message)


DEFAULTS = {
    "distance_um": 10.0,
    "receiver_radius_um": 1.0,
    "reference_radius_nm": 25.0,
    "reference_diffusion_m2_s": 8e-12,
    "nd": 3,
    "symbol_duration_s": 120.0,
    "samples_per_symbol": 600,
    "sizes_nm": [10.0, 30.0, 50.0, 70.0, 90.0, 110.0],
    "xi_det": 15.0,
    "xi_isi": None,
    "t0_frac": None,
    "l0": "search",
    "seed": 0,
    "out_dir": ".",
    "isi_rel_tol": 1e-9,
    "workers": 1,
    "benchmark": False,
    "mc": {
        "n_particles": 20000,
        "dt_sim_s": None,
        "t_end_s": 12.0,
        "sigma_mult": 3.0,
        "model_allowance": 0.03,
    },
}

# knobs that steer execution but not results; kept out of the config echo
# so reruns into another directory or with another worker count produce
# byte-identical outputs
_UNHASHED = ("out_dir", "workers")


def _is_bool(v) -> bool:
    return isinstance(v, (bool, np.bool_))


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not _is_bool(v)


def _is_num(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not _is_bool(v)


def _float_list(text: str):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pulsemix", description="design particle-size mixtures for diffusive pulse shaping")
    parser.add_argument("--version", action="version", version=f"pulsemix {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--sizes", type=_float_list, help="particle radii in nm, comma-separated")
        p.add_argument("--nd", type=int, choices=(0, 2, 3), help="detection weight exponent")
        p.add_argument("--workers", type=int, help="worker threads")

    p = sub.add_parser("cir", help="tabulate pulse and interference shapes")
    common(p)

    p = sub.add_parser("optimize", help="design a minimal mixture")
    common(p)
    p.add_argument("--t0-frac", type=_float_list, help="window length as a fraction of the symbol")
    p.add_argument("--xi-isi", type=_float_list, help="interference threshold")
    p.add_argument("--single-size", type=float, help="use only this radius (nm)")
    p.add_argument("--benchmark", action="store_const", const=True, help="also optimize each size alone")

    p = sub.add_parser("sweep", help="window length / interference threshold tradeoff")
    common(p)
    p.add_argument("--t0-frac", type=_float_list, help="window fractions to sweep")
    p.add_argument("--xi-isi", type=_float_list, help="interference thresholds to sweep")

    p = sub.add_parser("validate", help="Monte Carlo check of the pulse model")
    common(p)
    return parser


def _merge_file(cfg: dict, path: str) -> None:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path}: expected a JSON object")
    for key, value in data.items():
        if key == "mc":
            if not isinstance(value, dict):
                raise ConfigError("config key mc: expected an object")
            for mk, mv in value.items():
                if mk not in cfg["mc"]:
                    raise ConfigError(f"unknown config key: mc.{mk}")
                cfg["mc"][mk] = mv
        elif key in cfg:
            cfg[key] = value
        else:
            raise ConfigError(f"unknown config key: {key}")


def load_config(args: argparse.Namespace) -> dict:
    """Defaults, overlaid by the config file, overlaid by flags."""
    cfg = json.loads(json.dumps(DEFAULTS))
    if args.config is not None:
        _merge_file(cfg, args.config)
    flag_map = {
        "out": "out_dir",
        "seed": "seed",
        "sizes": "sizes_nm",
        "nd": "nd",
        "workers": "workers",
        "t0_frac": "t0_frac",
        "xi_isi": "xi_isi",
        "benchmark": "benchmark",
    }
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg[key] = value
    single = getattr(args, "single_size", None)
    if single is not None:
        cfg["sizes_nm"] = [single]

    if args.command in ("optimize", "sweep"):
        if cfg["xi_isi"] is None:
            cfg["xi_isi"] = [6.0, 8.0, 10.0] if args.command == "sweep" else [8.0]
        if cfg["t0_frac"] is None:
            cfg["t0_frac"] = [k / 20 for k in range(1, 10)] if args.command == "sweep" else [0.25]
    _check_config(cfg)
    return cfg


def _check_config(cfg: dict) -> None:
    for key in (
        "distance_um",
        "receiver_radius_um",
        "reference_radius_nm",
        "reference_diffusion_m2_s",
        "symbol_duration_s",
    ):
        if not (_is_num(cfg[key]) and cfg[key] > 0):
            raise ConfigError(f"config key {key}: expected a positive number, got {cfg[key]!r}")
    if not (_is_int(cfg["samples_per_symbol"]) and cfg["samples_per_symbol"] >= 2):
        raise ConfigError(f"config key samples_per_symbol: expected an integer >= 2, got {cfg['samples_per_symbol']!r}")
    if cfg["nd"] not in (0, 2, 3):
        raise ConfigError(f"config key nd: expected 0, 2 or 3, got {cfg['nd']!r}")
    sizes = cfg["sizes_nm"]
    if not (isinstance(sizes, list) and sizes and all(_is_num(s) and s > 0 for s in sizes)):
        raise ConfigError("config key sizes_nm: expected a non-empty list of positive radii")
    if not (_is_num(cfg["xi_det"]) and cfg["xi_det"] >= 0):
        raise ConfigError(f"config key xi_det: expected a nonnegative number, got {cfg['xi_det']!r}")
    for key in ("xi_isi", "t0_frac"):
        value = cfg[key]
        if value is None:
            continue
        if not (isinstance(value, list) and value and all(_is_num(v) and v > 0 for v in value)):
            raise ConfigError(f"config key {key}: expected a non-empty list of positive numbers")
    if cfg["t0_frac"] is not None and any(v > 1 for v in cfg["t0_frac"]):
        raise ConfigError("config key t0_frac: window fractions must be <= 1")
    if cfg["l0"] != "search" and not (_is_int(cfg["l0"]) and cfg["l0"] >= 0):
        raise ConfigError(f"config key l0: expected 'search' or a nonnegative integer, got {cfg['l0']!r}")
    if not (_is_int(cfg["seed"]) and cfg["seed"] >= 0):
        raise ConfigError(f"config key seed: expected a nonnegative integer, got {cfg['seed']!r}")
    if not (_is_num(cfg["isi_rel_tol"]) and 0 < cfg["isi_rel_tol"] <= 1e-3):
        raise ConfigError(f"config key isi_rel_tol: expected a number in (0, 1e-3], got {cfg['isi_rel_tol']!r}")
    if not (_is_int(cfg["workers"]) and cfg["workers"] >= 1):
        raise ConfigError(f"config key workers: expected a positive integer, got {cfg['workers']!r}")
    if not _is_bool(cfg["benchmark"]):
        raise ConfigError(f"config key benchmark: expected true or false, got {cfg['benchmark']!r}")
    mc = cfg["mc"]
    if not (_is_int(mc["n_particles"]) and mc["n_particles"] >= 1):
        raise ConfigError(f"config key mc.n_particles: expected a positive integer, got {mc['n_particles']!r}")
    if mc["dt_sim_s"] is not None and not (_is_num(mc["dt_sim_s"]) and mc["dt_sim_s"] > 0):
        raise ConfigError(f"config key mc.dt_sim_s: expected a positive number or null, got {mc['dt_sim_s']!r}")
    if not (_is_num(mc["t_end_s"]) and mc["t_end_s"] > 0):
        raise ConfigError(f"config key mc.t_end_s: expected a positive number, got {mc['t_end_s']!r}")
    if not (_is_num(mc["sigma_mult"]) and mc["sigma_mult"] > 0):
        raise ConfigError(f"config key mc.sigma_mult: expected a positive number, got {mc['sigma_mult']!r}")
    if not (_is_num(mc["model_allowance"]) and 0 <= mc["model_allowance"] < 1):
        raise ConfigError(f"config key mc.model_allowance: expected a number in [0, 1), got {mc['model_allowance']!r}")


def _realize(cfg: dict):
    """Physical objects from config; value errors surface as config errors."""
    try:
        params = ChannelParams(
            d=float(cfg["distance_um"]) * 1e-6,
            a=float(cfg["receiver_radius_um"]) * 1e-6,
            D0=float(cfg["reference_diffusion_m2_s"]),
            R0=float(cfg["reference_radius_nm"]) * 1e-9,
            T=float(cfg["symbol_duration_s"]),
        )
        radii = [s * 1e-9 for s in cfg["sizes_nm"]]
        particles = ParticleSet.from_radii(radii, params.R0, params.D0, cfg["nd"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    labels = ["%gnm" % s for s in cfg["sizes_nm"]]
    return params, particles, labels


def _config_sha(cfg: dict) -> str:
    echo = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    canonical = json.dumps(echo, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_echo(cfg: dict, out_dir: Path) -> str:
    echo = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    (out_dir / "effective_config.json").write_text(
        json.dumps(echo, sort_keys=True, indent=2) + "\n"
    )
    return _config_sha(cfg)


def _fmt(value) -> str:
    if _is_bool(value):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def _write_csv(path: Path, command: str, sha: str, header, rows, extra_meta=()) -> None:
    lines = [f"# pulsemix {__version__}", f"# command: {command}", f"# config: sha256:{sha}"]
    lines += [f"# {m}" for m in extra_meta]
    lines.append(",".join(header))
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_cir(cfg: dict, out_dir: Path) -> int:
    params, particles, labels = _realize(cfg)
    sha = _write_echo(cfg, out_dir)
    L = cfg["samples_per_symbol"]
    sc = sample_matrices(params, particles, L, cfg["isi_rel_tol"])
    header = ["t_s"]
    for lab in labels:
        header += [f"p_{lab}", f"pr_{lab}"]
    rows = []
    for l in range(L):
        row = [l * sc.dt]
        for i in range(particles.M):
            row += [float(sc.P[l, i]), float(sc.P_r[l, i])]
        rows.append(row)
    _write_csv(out_dir / "cir.csv", "cir", sha, header, rows)
    return EXIT_OK


def _single(values: list, key: str) -> float:
    if len(values) != 1:
        raise ConfigError(f"optimize expects a single {key} value, got {len(values)}")
    return float(values[0])


def cmd_optimize(cfg: dict, out_dir: Path) -> int:
    params, particles, labels = _realize(cfg)
    sha = _write_echo(cfg, out_dir)
    xi_isi = _single(cfg["xi_isi"], "xi_isi")
    t0_frac = _single(cfg["t0_frac"], "t0_frac")
    L = cfg["samples_per_symbol"]
    L0 = max(1, int(round(t0_frac * L)))
    l0 = None if cfg["l0"] == "search" else int(cfg["l0"])
    try:
        spec = DetectionSpec(xi_det=float(cfg["xi_det"]), xi_isi=xi_isi, L0=L0, l0=l0)
        sc = sample_matrices(params, particles, L, cfg["isi_rel_tol"])
        res = optimize_mixture(sc, particles, spec)
    except ValueError as exc:
        raise ConfigError(str(exc))

    _write_csv(
        out_dir / "per_l0.csv",
        "optimize",
        sha,
        ["l0", "status", "objective"],
        [(l, status, obj) for l, status, obj in res.per_l0],
    )

    rows = []
    if res.feasible:
        for i, lab in enumerate(labels):
            rows.append(
                [
                    float(cfg["sizes_nm"][i]),
                    particles.rho[i],
                    particles.D[i],
                    float(res.m[i]),
                    int(res.counts[i]),
                    float(res.m_rounded[i]),
                ]
            )
    _write_csv(
        out_dir / "optimize.csv",
        "optimize",
        sha,
        ["size_nm", "rho", "D_m2_s", "m", "count", "m_rounded"],
        rows,
    )

    lines = [
        f"pulsemix {__version__} optimize",
        f"config: sha256:{sha}",
        "sizes_nm: " + " ".join("%g" % s for s in cfg["sizes_nm"]),
        "thresholds: xi_det=%g xi_isi=%g" % (spec.xi_det, xi_isi),
        "window: L0=%d samples (%.6g s), offset %s"
        % (L0, L0 * sc.dt, "search" if l0 is None else f"fixed at {l0}"),
        f"feasible: {'yes' if res.feasible else 'no'}",
    ]
    if res.feasible:
        lines += [
            f"l0_star: {res.l0_star} (window start %.6g s)" % (res.l0_star * sc.dt),
            "N_continuous: %.17g" % res.N,
            "N_rounded: %.17g" % res.N_rounded,
            f"rounded_feasible: {'yes' if res.rounded_feasible else 'no'}",
            "m: " + " ".join("%.17g" % v for v in res.m),
            "counts: " + " ".join(str(int(c)) for c in res.counts),
        ]
    else:
        lines += _diagnose_infeasible(sc, particles, spec, xi_isi)
    if cfg["benchmark"]:
        singles, best_idx = single_size_benchmark(sc, particles, spec)
        lines.append("single-size benchmark:")
        for lab, single_res in zip(labels, singles):
            if single_res.feasible:
                lines.append("  %s: N=%.17g" % (lab, single_res.N))
            else:
                lines.append(f"  {lab}: infeasible")
        lines.append(f"  best: {labels[best_idx] if best_idx is not None else 'none feasible'}")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def _diagnose_infeasible(sc, particles, spec, xi_isi) -> list:
    """Explain which constraint family blocks the design."""
    if spec.xi_det == 0:
        return ["diagnosis: no offset admissible for the window geometry"]
    det_only = DetectionSpec(xi_det=spec.xi_det, xi_isi=1e30, L0=spec.L0, l0=0)
    probe = optimize_mixture(sc, particles, det_only)
    if not probe.feasible:
        return [
            "diagnosis: the detection threshold alone is unreachable in this window",
        ]
    isi_peak = float(np.max(sc.P_r[: spec.L0] @ probe.m))
    return [
        "diagnosis: detection-only design at offset 0 needs N=%.6g" % probe.N,
        "  its worst-case interference %.6g exceeds xi_isi=%g (factor %.3g)"
        % (isi_peak, xi_isi, isi_peak / xi_isi),
        "  raise xi_isi, shorten the window, or allow smaller sizes",
    ]


def cmd_sweep(cfg: dict, out_dir: Path) -> int:
    params, particles, labels = _realize(cfg)
    sha = _write_echo(cfg, out_dir)
    L = cfg["samples_per_symbol"]
    l0 = None if cfg["l0"] == "search" else int(cfg["l0"])
    try:
        base = DetectionSpec(xi_det=float(cfg["xi_det"]), xi_isi=float(cfg["xi_isi"][0]), L0=1, l0=l0)
        points = sweep_tradeoff(
            params,
            particles,
            base,
            cfg["t0_frac"],
            cfg["xi_isi"],
            L=L,
            rel_tol=cfg["isi_rel_tol"],
            workers=cfg["workers"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))

    D_small = particles.D[0]
    bounds = {xi: analytic_bounds(params, float(cfg["xi_det"]), float(xi), D_small) for xi in cfg["xi_isi"]}
    header = ["xi_isi", "t0_frac", "n_all", "best_single_size_nm"]
    header += [f"n_single_{lab}" for lab in labels]
    header += ["m_min", "m_max", "t0_max_frac"]
    rows = []
    for pt in points:
        b = bounds[pt.xi_isi]
        if math.isnan(pt.best_single_size):
            best_nm = math.nan
        else:
            best_nm = float(cfg["sizes_nm"][particles.rho.index(pt.best_single_size)])
        rows.append(
            [pt.xi_isi, pt.T0_frac, pt.N_all, best_nm, *pt.N_single, b.m_min, b.m_max, b.T0_max_frac]
        )
    _write_csv(out_dir / "sweep.csv", "sweep", sha, header, rows)
    return EXIT_OK


def cmd_validate(cfg: dict, out_dir: Path) -> int:
    params, particles, labels = _realize(cfg)
    sha = _write_echo(cfg, out_dir)
    mc = cfg["mc"]
    dt = params.T / cfg["samples_per_symbol"]
    dt_sim = float(mc["dt_sim_s"]) if mc["dt_sim_s"] is not None else dt / 10.0
    horizon = int(round(mc["t_end_s"] / dt_sim))
    if horizon < 1:
        raise ConfigError("config key mc.t_end_s: shorter than one simulation step")

    meta = []
    rows = []
    for i, lab in enumerate(labels):
        mc_cfg = McConfig(
            n_particles=mc["n_particles"],
            dt_sim=dt_sim,
            horizon=horizon,
            seed=cfg["seed"],
            D=particles.D[i],
            geometry=params,
            substream_offset=i * mc["n_particles"],
        )
        est = simulate_cir(mc_cfg, workers=cfg["workers"])
        analytic = cir_eval(est.t_grid, particles.D[i], params)
        rep = validate_cir(est, analytic, mc["sigma_mult"], mc["model_allowance"])
        meta.append(
            "size %s: checked=%d passed=%d fraction=%.6g verdict=%s"
            % (lab, rep.n_checked, rep.n_passed, rep.fraction, "pass" if rep.passed else "fail")
        )
        msd_expected = 6.0 * particles.D[i] * est.t_grid
        for k in range(horizon):
            rows.append(
                [
                    float(cfg["sizes_nm"][i]),
                    float(est.t_grid[k]),
                    float(est.p_hat[k]),
                    float(est.stderr[k]),
                    float(analytic[k]),
                    bool(rep.gate[k]),
                    bool(rep.sample_pass[k]),
                    float(est.msd[k]),
                    float(est.msd_stderr[k]),
                    float(msd_expected[k]),
                ]
            )
    header = [
        "size_nm",
        "t_s",
        "p_hat",
        "stderr",
        "analytic",
        "gate",
        "ok",
        "msd_m2",
        "msd_stderr_m2",
        "msd_expected_m2",
    ]
    _write_csv(out_dir / "validate_report.csv", "validate", sha, header, rows, extra_meta=meta)
    return EXIT_OK


_COMMANDS = {
    "cir": cmd_cir,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args)
        out_dir = Path(cfg["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out_dir)
    except ConfigError as exc:
        print(f"pulsemix: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"pulsemix: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
