"""Command-line front end: scenario scans, CSV emission, and self-test.

Subcommands: backflow, rates, divisibility, reproduce, selftest.
Config precedence: command-line flags > JSON config file (--config) >
defaults; the SWITCHBACK_OUT environment variable sets the default output
directory. All numeric CSV fields use 17 significant digits and line 1 of
every CSV is a comment echoing the tool version, seed, and configuration,
so identical configurations give byte-identical files.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import BlochOutOfBall, DensityMatrix, density_from_bloch
from .channels import (
    KrausChannel,
    compose_parallel,
    compose_series,
    eternal_channel,
    mix,
    series_doubled_family,
)
from .switchop import T_STAR, switch_coefficients, switched_family
from .analysis import (
    DERIV_TOL,
    FD_STEP,
    RATE_CAP,
    backflow_scan,
    closed_form_switched_rates,
    divisibility_verdict,
    generator_samples,
)

SCENARIOS = ("eternal", "switched", "series", "parallel", "mixture")
RATE_SCENARIOS = ("eternal", "switched", "series")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"invalid {field_name}: {message}")
        self.field_name = field_name


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "eternal"
    t_max: float = 5.0
    dt: float = 0.001
    state_a: tuple[float, float, float] = (0.0, 0.0, 1.0)
    state_b: tuple[float, float, float] = (0.0, 0.0, -1.0)
    mixture_p: float = 0.5
    output_dir: str = "."
    seed: int = 42

    def validate(self) -> "RunConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"{self.scenario!r} not in {SCENARIOS}")
        if not self.t_max > 0:
            raise ConfigError("t_max", f"{self.t_max} must be > 0")
        if not self.dt > 0:
            raise ConfigError("dt", f"{self.dt} must be > 0")
        if not self.dt < self.t_max:
            raise ConfigError("dt", f"{self.dt} must be < t_max = {self.t_max}")
        if not 0.0 <= self.mixture_p <= 1.0:
            raise ConfigError("mixture_p", f"{self.mixture_p} outside [0, 1]")
        for name, triple in (("state_a", self.state_a), ("state_b", self.state_b)):
            if len(triple) != 3:
                raise ConfigError(name, f"need 3 components, got {triple}")
            try:
                density_from_bloch(triple)
            except BlochOutOfBall as exc:
                raise ConfigError(name, str(exc)) from exc
        return self


def _echo(cfg: RunConfig) -> str:
    sa = ",".join(f"{x:g}" for x in cfg.state_a)
    sb = ",".join(f"{x:g}" for x in cfg.state_b)
    return (
        f"switchback {__version__} seed={cfg.seed} scenario={cfg.scenario} "
        f"t_max={cfg.t_max:g} dt={cfg.dt:g} state_a={sa} state_b={sb} "
        f"p={cfg.mixture_p:g}"
    )


def _family(cfg: RunConfig):
    if cfg.scenario == "eternal":
        return eternal_channel
    if cfg.scenario == "switched":
        return switched_family
    if cfg.scenario == "series":
        return series_doubled_family
    if cfg.scenario == "parallel":
        return lambda t: compose_parallel(eternal_channel(t), eternal_channel(t))
    p = cfg.mixture_p

    def mixture(t: float) -> KrausChannel:
        ch = eternal_channel(t)
        return mix([(p, compose_series(ch, ch)), (1.0 - p, compose_series(ch, ch))])

    return mixture


def _states(cfg: RunConfig) -> tuple[DensityMatrix, DensityMatrix]:
    a = density_from_bloch(cfg.state_a)
    b = density_from_bloch(cfg.state_b)
    if cfg.scenario == "parallel":
        a = DensityMatrix(np.kron(a.matrix, a.matrix))
        b = DensityMatrix(np.kron(b.matrix, b.matrix))
    return a, b


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: Path, comment: str, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# {comment}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def cmd_backflow(cfg: RunConfig) -> int:
    grid = np.arange(0.0, cfg.t_max + cfg.dt / 2, cfg.dt)
    rho_a, rho_b = _states(cfg)
    report = backflow_scan(_family(cfg), rho_a, rho_b, grid)
    rows = (
        [_fmt(t), _fmt(d), _fmt(dd), str(int(dd > DERIV_TOL))]
        for t, d, dd in zip(report.times, report.distance, report.derivative)
    )
    out = Path(cfg.output_dir) / "distance.csv"
    _write_csv(out, _echo(cfg), ["t", "distance", "derivative", "reviving"], rows)
    t_char = (
        "none" if report.characteristic_time is None
        else f"{report.characteristic_time:.6f}"
    )
    print(f"measure={report.measure:.6f}, characteristic_time={t_char}")
    print(f"wrote {out}")
    return 0


def _rate_rows(samples):
    for s in samples:
        if s.pole:
            yield [_fmt(s.t), "", "", "", "1"]
        else:
            yield [_fmt(s.t), _fmt(s.gamma1), _fmt(s.gamma2), _fmt(s.gamma3), "0"]


def _rate_grid(cfg: RunConfig) -> np.ndarray:
    return np.arange(cfg.dt, cfg.t_max + cfg.dt / 2, cfg.dt)


def _rate_samples(cfg: RunConfig):
    h = min(FD_STEP, cfg.dt / 2)
    return generator_samples(_family(cfg), _rate_grid(cfg), h=h, rate_cap=RATE_CAP)


def cmd_rates(cfg: RunConfig) -> int:
    if cfg.scenario not in RATE_SCENARIOS:
        raise ConfigError(
            "scenario",
            f"{cfg.scenario!r} has no single-qubit generator; pick one of "
            f"{RATE_SCENARIOS}",
        )
    samples = _rate_samples(cfg)
    out = Path(cfg.output_dir) / "rates.csv"
    _write_csv(
        out, _echo(cfg), ["t", "gamma1", "gamma2", "gamma3", "pole"],
        _rate_rows(samples),
    )
    print(f"wrote {out}")
    return 0


def _format_intervals(intervals) -> str:
    if not intervals:
        return "none"
    return ", ".join(f"[{a:.4f}, {b:.4f}]" for a, b in intervals)


def _grouped_violations(violated_pairs):
    # merge consecutive times sharing the same violated pair set
    groups = []
    for t, pairs in violated_pairs:
        if groups and groups[-1][2] == pairs:
            groups[-1][1] = t
        else:
            groups.append([t, t, pairs])
    return groups


def cmd_divisibility(cfg: RunConfig) -> int:
    if cfg.scenario not in RATE_SCENARIOS:
        raise ConfigError(
            "scenario",
            f"{cfg.scenario!r} has no single-qubit generator; pick one of "
            f"{RATE_SCENARIOS}",
        )
    verdict = divisibility_verdict(_rate_samples(cfg))
    print(f"scenario={cfg.scenario}")
    print(f"CP: {_format_intervals(verdict.cp_divisible_intervals)}")
    print(f"P: {_format_intervals(verdict.p_divisible_intervals)}")
    if not verdict.violated_pairs:
        print("violated pairwise sums: none")
    else:
        print("violated pairwise sums:")
        for t0, t1, pairs in _grouped_violations(verdict.violated_pairs):
            names = " ".join(f"rate{i}+rate{j}<0" for i, j in pairs)
            print(f"  t in [{t0:.4f}, {t1:.4f}]: {names}")
    return 0


def cmd_reproduce(cfg: RunConfig, figure: str) -> int:
    grid = np.arange(0.0, cfg.t_max + cfg.dt / 2, cfg.dt)
    out_dir = Path(cfg.output_dir)
    if figure in ("distance", "all"):
        rows = []
        for t in grid:
            cf = switch_coefficients(float(t))
            rows.append([_fmt(t), _fmt(np.exp(-2.0 * t)), _fmt(abs(cf.A - cf.B))])
        _write_csv(out_dir / "fig2.csv", _echo(cfg),
                   ["t", "d_eternal", "d_switched"], rows)
        print(f"wrote {out_dir / 'fig2.csv'}")
    if figure in ("rates", "all"):
        samples = []
        for t in _rate_grid(cfg):
            s = closed_form_switched_rates(float(t))
            if max(abs(s.gamma1), abs(s.gamma2), abs(s.gamma3)) > RATE_CAP:
                s = replace(s, gamma1=np.nan, gamma2=np.nan, gamma3=np.nan, pole=True)
            samples.append(s)
        _write_csv(out_dir / "fig3.csv", _echo(cfg),
                   ["t", "gamma1", "gamma2", "gamma3", "pole"], _rate_rows(samples))
        print(f"wrote {out_dir / 'fig3.csv'}")
    print(f"t* = {T_STAR:.6f} (expected ~0.67)")
    return 0


def cmd_selftest(cfg: RunConfig) -> int:
    from .acceptance import run_all

    return run_all(seed=cfg.seed)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", choices=SCENARIOS)
    parser.add_argument("--t-max", type=float, dest="t_max")
    parser.add_argument("--dt", type=float)
    parser.add_argument("--state-a", dest="state_a", metavar="x,y,z")
    parser.add_argument("--state-b", dest="state_b", metavar="x,y,z")
    parser.add_argument("--p", type=float, dest="mixture_p")
    parser.add_argument("--out", dest="output_dir")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--config", help="JSON file with RunConfig keys")


def _parse_triple(text: str, name: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(name, f"expected x,y,z; got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(name, f"non-numeric component in {text!r}") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if os.environ.get("SWITCHBACK_OUT"):
        values["output_dir"] = os.environ["SWITCHBACK_OUT"]
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from exc
        known = {f.name for f in fields(RunConfig)}
        for key, value in loaded.items():
            if key not in known:
                raise ConfigError("config", f"unknown key {key!r}")
            values[key] = tuple(value) if key in ("state_a", "state_b") else value
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    for name in ("state_a", "state_b"):
        if isinstance(values.get(name), str):
            values[name] = _parse_triple(values[name], name)
    return RunConfig(**values).validate()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="switchback",
        description="Qubit channel dynamics under the quantum SWITCH",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("backflow", "rates", "divisibility", "selftest"):
        _add_common(sub.add_parser(name))
    repro = sub.add_parser("reproduce")
    repro.add_argument("figure", nargs="?", default="all",
                       choices=("distance", "rates", "all"))
    _add_common(repro)

    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "backflow":
            return cmd_backflow(cfg)
        if args.command == "rates":
            return cmd_rates(cfg)
        if args.command == "divisibility":
            return cmd_divisibility(cfg)
        if args.command == "reproduce":
            return cmd_reproduce(cfg, args.figure)
        return cmd_selftest(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
