"""``hardcore-sbd <command> --config <path> [--out <dir>] [--seed <u64>]``

Exit codes: 0 success, 1 configuration error, 2 runtime contract violation
(including a failed ``check``), 3 no CFTP coalescence within budget.
Set ``HARDCORE_SBD_LOG`` (e.g. ``INFO``) for log output.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .analysis import fit_decay_rate, packing_fraction, rho_sweep
from .bounds import naive_rate, theorem_condition
from .cftp import sample_stationary
from .checks import run_all
from .coupling import DensitySeries, simulate_coupled
from .dynamics import INITIAL_KINDS, build_dependency_graph, generate_initial, simulate
from .geometry import ContractError, unit_ball_volume
from .io import write_json, write_series_csv, write_snapshot_csv, write_table_csv
from .params import SimParams
from .replicas import map_replicas

log = logging.getLogger("hardcore_sbd")

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT, EXIT_NO_COALESCENCE = 0, 1, 2, 3
TOOL = "hardcore-sbd"


class ConfigError(Exception):
    pass


@dataclass
class BaseConfig:
    d: int = 2
    L: float = 20.0
    rho: float = 0.75
    lam: float = 1.0
    seed: int = 0
    boundary: str = "torus"
    slab_len: float = 1.0
    workers: int = 0  # 0 = all available cores; results do not depend on it

    def params(self, seed: Optional[int] = None) -> SimParams:
        return SimParams(self.d, self.L, self.rho, self.lam, self.seed if seed is None else seed,
                         self.boundary, self.slab_len)

    def validate(self) -> None:
        try:
            self.params()
        except ContractError as exc:
            raise ConfigError(str(exc)) from None
        if self.workers < 0:
            raise ConfigError("field 'workers': must be >= 0")


@dataclass
class SimulateConfig(BaseConfig):
    init: str = "empty"
    lam_prop: float = 1.0
    T: float = 10.0
    sample_dt: float = 1.0
    replicas: int = 1

    def validate(self):
        super().validate()
        if self.init not in INITIAL_KINDS:
            raise ConfigError(f"field 'init': must be one of {INITIAL_KINDS}")
        _positive(self, "T", "sample_dt", "lam_prop", "replicas")


@dataclass
class CoupleConfig(BaseConfig):
    init1: str = "empty"
    init2: str = "matern2"
    lam_prop: float = 1.0
    T: float = 3.0
    sample_dt: float = 0.1
    replicas: int = 20
    t_min: float = 1.0
    tolerance: float = 0.15

    def validate(self):
        super().validate()
        for k in ("init1", "init2"):
            if getattr(self, k) not in INITIAL_KINDS:
                raise ConfigError(f"field '{k}': must be one of {INITIAL_KINDS}")
        _positive(self, "T", "sample_dt", "lam_prop", "replicas")


@dataclass
class CftpConfig(BaseConfig):
    replicas: int = 1
    T_init: float = 1.0
    T_max: float = 64.0

    def validate(self):
        super().validate()
        _positive(self, "replicas", "T_init", "T_max")


@dataclass
class SweepConfig(BaseConfig):
    rhos: List[float] = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    T: float = 64.0
    replicas: int = 4

    def validate(self):
        super().validate()
        _positive(self, "T", "replicas")
        if not self.rhos or not all(isinstance(r, (int, float)) and 0 < r <= 1 for r in self.rhos):
            raise ConfigError("field 'rhos': must be a non-empty list of values in (0, 1]")


@dataclass
class CheckConfig(BaseConfig):
    scale: float = 1.0

    def validate(self):
        super().validate()
        _positive(self, "scale")


@dataclass
class SlabDemoConfig(BaseConfig):
    L: float = 50.0
    eps: float = 0.05
    replicas: int = 100

    def validate(self):
        super().validate()
        _positive(self, "eps", "replicas")


CONFIGS = {"simulate": SimulateConfig, "couple": CoupleConfig, "cftp": CftpConfig, "sweep": SweepConfig,
           "check": CheckConfig, "slab-demo": SlabDemoConfig}


def _positive(cfg, *names):
    for n in names:
        if not getattr(cfg, n) > 0:
            raise ConfigError(f"field '{n}': must be positive, got {getattr(cfg, n)!r}")


def load_config(command: str, path: Optional[str], seed: Optional[int]):
    cls = CONFIGS[command]
    raw = {}
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        if raw.get("tool") == TOOL and "config" in raw:  # a manifest
            if raw.get("command") != command:
                raise ConfigError(f"manifest was written by '{raw.get('command')}', not '{command}'")
            raw = raw["config"]
    known = {f.name: f for f in fields(cls)}
    for k in raw:
        if k not in known:
            line = _line_of(path, k)
            raise ConfigError(f"unknown field '{k}'" + (f" (line {line})" if line else ""))
    kwargs = {}
    for k, v in raw.items():
        default = getattr(cls(), k)
        if isinstance(default, bool) or (isinstance(default, int) and not isinstance(v, int)) \
                or (isinstance(default, float) and not isinstance(v, (int, float))) \
                or (isinstance(default, str) and not isinstance(v, str)) \
                or (isinstance(default, list) and not isinstance(v, list)) or isinstance(v, bool):
            raise ConfigError(f"field '{k}': expected {type(default).__name__}, got {v!r}")
        kwargs[k] = float(v) if isinstance(default, float) else v
    if seed is not None:
        kwargs["seed"] = seed
    cfg = cls(**kwargs)
    cfg.validate()
    return cfg


def _line_of(path, key) -> Optional[int]:
    if not path:
        return None
    for i, line in enumerate(Path(path).read_text().splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return None


def _workers(cfg) -> int:
    return cfg.workers or (os.cpu_count() or 1)


def write_manifest(out: Path, command: str, cfg) -> None:
    write_json(out / "manifest.json", {"tool": TOOL, "version": __version__, "command": command,
                                       "seed": cfg.seed, "config": asdict(cfg)})


# ---------------------------------------------------------------------------
# commands; each returns an exit code


def _simulate_replica(args):
    cfg, i = args
    p = cfg.params(cfg.seed + i)
    init = generate_initial(cfg.init, cfg.lam_prop, p)
    traj, final = simulate(p, init, 0.0, cfg.T, cfg.sample_dt)
    return [(s.time, s.n_points) for s in traj.snapshots], final


def cmd_simulate(cfg: SimulateConfig, out: Path) -> int:
    res = map_replicas(_simulate_replica, [(cfg, i) for i in range(cfg.replicas)], _workers(cfg))
    rows = []
    for i, (snaps, final) in enumerate(res):
        rows += [(i, t, n, n / final.window.volume) for t, n in snaps]
        write_snapshot_csv(out / f"snapshot_{i:04d}.csv", final)
    write_table_csv(out / "trajectory.csv", ["replica", "t", "n_points", "intensity"], rows)
    return EXIT_OK


def _couple_replica(args):
    cfg, i = args
    p = cfg.params(cfg.seed + i)
    a = generate_initial(cfg.init1, cfg.lam_prop, p, tag=1001)
    b = generate_initial(cfg.init2, cfg.lam_prop, p, tag=1002)
    series, _ = simulate_coupled(p, a, b, cfg.T, cfg.sample_dt)
    return series


def cmd_couple(cfg: CoupleConfig, out: Path) -> int:
    series = map_replicas(_couple_replica, [(cfg, i) for i in range(cfg.replicas)], _workers(cfg))
    mean = DensitySeries.mean(series)
    write_series_csv(out / "series.csv", mean)
    fit = fit_decay_rate(mean, t_min=cfg.t_min)
    naive = naive_rate(cfg.rho, cfg.d, cfg.lam)
    report = {"fit": fit.to_dict(), "naive_rate": naive, "required_c_hat": -naive - cfg.tolerance,
              "meets_naive_bound": bool(fit.conclusive and fit.c_hat >= -naive - cfg.tolerance),
              "condition": theorem_condition(cfg.rho, cfg.d, cfg.lam).to_dict(), "replicas": cfg.replicas}
    write_json(out / "decay_fit.json", report)
    return EXIT_OK


def _cftp_replica(args):
    cfg, i = args
    return sample_stationary(cfg.params(cfg.seed + i), cfg.T_init, cfg.T_max)


def cmd_cftp(cfg: CftpConfig, out: Path) -> int:
    results = map_replicas(_cftp_replica, [(cfg, i) for i in range(cfg.replicas)], _workers(cfg))
    summary = []
    for r in results:
        write_snapshot_csv(out / f"sample_{r.seed}.csv", r.sample)
        write_json(out / f"sample_{r.seed}.json", r.sidecar())
        summary.append(r.sidecar() | {"diagnostic": r.diagnostic, "n_points": len(r.sample),
                                      "packing_fraction": packing_fraction(r.sample)})
    write_json(out / "summary.json", summary)
    failed = [r for r in results if not r.coalesced]
    for r in failed:
        print(f"seed {r.seed}: not coalesced: {r.diagnostic}", file=sys.stderr)
    return EXIT_NO_COALESCENCE if failed else EXIT_OK


def cmd_sweep(cfg: SweepConfig, out: Path) -> int:
    rows = rho_sweep(cfg.params(), cfg.rhos, cfg.T, cfg.replicas, _workers(cfg))
    write_table_csv(out / "sweep.csv", ["rho", "intensity", "packing_fraction", "matern1_ref", "matern2_ref",
                                        "coalesced"],
                    [(r.rho, r.intensity, r.packing_fraction, r.matern1_ref, r.matern2_ref,
                      str(r.coalesced).lower()) for r in rows])
    return EXIT_OK


def cmd_check(cfg: CheckConfig, out: Path) -> int:
    results = run_all(cfg.scale, cfg.seed)
    for r in results:
        print(r.line())
    write_json(out / "check.json", [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_CONTRACT


def _slab_replica(args):
    cfg, i = args
    g = build_dependency_graph(cfg.params(cfg.seed + i), 0.0, cfg.eps)
    return len(g.events), g.n_components, g.max_component_size


def cmd_slab_demo(cfg: SlabDemoConfig, out: Path) -> int:
    res = map_replicas(_slab_replica, [(cfg, i) for i in range(cfg.replicas)], _workers(cfg))
    write_table_csv(out / "slab_components.csv", ["seed", "events", "components", "max_component"],
                    [(cfg.seed + i, *r) for i, r in enumerate(res)])
    mx = np.array([r[2] for r in res], dtype=float)
    # mean number of rain points within distance 2 of a given one
    mean_degree = cfg.lam * cfg.eps * unit_ball_volume(cfg.d) * 2 ** cfg.d
    write_json(out / "slab_demo.json", {"eps": cfg.eps, "lambda_eps": cfg.lam * cfg.eps,
                                        "mean_degree": mean_degree, "mean_max_component": float(mx.mean()),
                                        "max_max_component": int(mx.max()), "replicas": cfg.replicas})
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "couple": cmd_couple, "cftp": cmd_cftp, "sweep": cmd_sweep,
            "check": cmd_check, "slab-demo": cmd_slab_demo}


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def main(argv: Optional[List[str]] = None) -> int:
    level = os.environ.get("HARDCORE_SBD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    ap = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="flat JSON config, or a manifest.json from an earlier run")
    ap.add_argument("--out", help="artifact directory (default: out/<command>)")
    ap.add_argument("--seed", type=_u64, help="override the config seed")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or Path("out") / args.command)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, args.command, cfg)
    try:
        return COMMANDS[args.command](cfg, out)
    except ContractError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
