"""Command-line entry point: ``python -m dnabec <subcommand> [--config cfg.json] ...``.

Every subcommand reads optional parameters from a JSON config object;
``--seed``, ``--trials``, ``--budget``, ``--out`` and ``--first-hit`` override
the matching config keys.  Tabular results are CSV, the capacity query is
JSON.  Config errors exit with status 2 and a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Mapping

from . import harness
from .channel import ChannelParams, SamplingDistribution, capacity
from .errors import ConfigError

DEFAULT_DIST = {"pmf": [0.0, 1.0]}


class Cfg:
    """Typed accessor over a JSON object that reports dotted error locations."""

    def __init__(self, data: Mapping[str, Any], where: str = ""):
        if not isinstance(data, Mapping):
            raise ConfigError("expected a JSON object", where or "<root>")
        self.data = data
        self.where = where

    def _loc(self, key: str) -> str:
        return f"{self.where}.{key}" if self.where else key

    def number(self, key: str, default=None, integer: bool = False):
        val = self.data.get(key, default)
        if val is None:
            raise ConfigError("missing required field", self._loc(key))
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError("expected a number", self._loc(key))
        if integer:
            if int(val) != val:
                raise ConfigError("expected an integer", self._loc(key))
            return int(val)
        return float(val)

    def numbers(self, key: str, default=None, integer: bool = False) -> list:
        val = self.data.get(key, default)
        if not isinstance(val, list) or not val:
            raise ConfigError("expected a non-empty list of numbers", self._loc(key))
        sub = Cfg({str(i): v for i, v in enumerate(val)}, self._loc(key))
        return [sub.number(str(i), integer=integer) for i in range(len(val))]

    def boolean(self, key: str, default: bool) -> bool:
        val = self.data.get(key, default)
        if not isinstance(val, bool):
            raise ConfigError("expected true or false", self._loc(key))
        return val

    def dist(self, key: str = "distribution") -> SamplingDistribution:
        return SamplingDistribution.from_json(self.data.get(key, DEFAULT_DIST), self._loc(key))

    def dists(self, key: str = "distributions", default=None) -> list[SamplingDistribution]:
        val = self.data.get(key, default)
        if not isinstance(val, list) or not val:
            raise ConfigError("expected a non-empty list of distributions", self._loc(key))
        return [SamplingDistribution.from_json(d, f"{self._loc(key)}[{i}]") for i, d in enumerate(val)]


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", path)
    return data


def _overrides(args: argparse.Namespace, data: dict) -> dict:
    data = dict(data)
    for key in ("seed", "trials", "budget"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "first_hit", False):
        data["first_hit"] = True
    return data


def cmd_capacity(cfg: Cfg, args) -> int:
    report = harness.run_capacity_query(cfg.number("p", 0.0), cfg.number("beta", 2.0), cfg.dist())
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    _emit(text, args.out)
    return 0


def cmd_regime_curves(cfg: Cfg, args) -> int:
    harness.run_regime_curves(
        cfg.number("p_min", 1e-3), cfg.number("p_max", 0.9), cfg.number("n_points", 200, integer=True),
        args.out or sys.stdout,
    )
    return 0


def cmd_lemma1(cfg: Cfg, args) -> int:
    harness.run_lemma1(
        cfg.numbers("B", [20, 100, 200], integer=True),
        cfg.numbers("delta", [0.0, 0.1, 0.5]),
        cfg.number("trials", 10_000, integer=True),
        cfg.number("seed", 0, integer=True),
        args.out or sys.stdout,
    )
    return 0


def cmd_lemma2(cfg: Cfg, args) -> int:
    harness.run_lemma2(
        cfg.numbers("M", [8, 16, 32, 64], integer=True),
        cfg.number("p", 0.1),
        cfg.number("beta", 2.0),
        cfg.dist(),
        cfg.number("trials", 500, integer=True),
        cfg.number("seed", 0, integer=True),
        args.out or sys.stdout,
        epsilon=cfg.number("epsilon", 0.05),
    )
    return 0


def cmd_pair_consistency(cfg: Cfg, args) -> int:
    ps = cfg.numbers("p", [0.1, 0.3, 0.5])
    Ls = cfg.numbers("L", [8, 16, 16], integer=True)
    if len(ps) != len(Ls):
        raise ConfigError("p and L must have equal length", "L")
    harness.run_pair_consistency(
        list(zip(ps, Ls)), cfg.number("pairs", 100_000, integer=True), cfg.number("seed", 0, integer=True),
        args.out or sys.stdout,
    )
    return 0


def cmd_cluster_count(cfg: Cfg, args) -> int:
    default = [{"family": "geometric", "r": 0.5, "nmax": 30}, {"family": "poisson", "lambda": 1.0, "nmax": 20}]
    harness.run_cluster_count(
        cfg.number("M", 50, integer=True),
        cfg.number("epsilon", 0.2),
        cfg.dists("distributions", default),
        cfg.number("trials", 10_000, integer=True),
        cfg.number("seed", 0, integer=True),
        args.out or sys.stdout,
    )
    return 0


def sweep_config(cfg: Cfg) -> harness.SweepConfig:
    M = cfg.number("M", 6, integer=True)
    p = cfg.number("p", 0.1)
    if "L" in cfg.data:
        L = cfg.number("L", integer=True)
    else:
        L = ChannelParams.from_beta(M, cfg.number("beta", 9.0), p).L
    dist = cfg.dist()
    if "rates" in cfg.data:
        rates = cfg.numbers("rates")
    else:
        cap = capacity(dist, p, ChannelParams(M, L, p).beta)
        rates = [f * cap for f in cfg.numbers("capacity_fractions", [0.2, 0.4, 0.6, 0.8, 1.0, 1.2])]
    return harness.SweepConfig(
        M=M,
        L=L,
        p=p,
        dist=dist,
        rates=rates,
        num_messages=cfg.number("num_messages", 16, integer=True),
        trials=cfg.number("trials", 100, integer=True),
        seed=cfg.number("seed", 0, integer=True),
        budget=cfg.number("budget", 1_000_000, integer=True),
        epsilon=cfg.number("epsilon", 0.05),
        alpha=cfg.number("alpha", 0.0),
        first_hit=cfg.boolean("first_hit", False),
        exhaustive=cfg.boolean("exhaustive", True),
        max_strands=cfg.number("max_strands", 8, integer=True),
        max_reads=cfg.number("max_reads", 16, integer=True),
        workers=cfg.number("workers", 1, integer=True),
        timing=cfg.boolean("timing", False),
    )


def cmd_simulate(cfg: Cfg, args) -> int:
    sc = sweep_config(cfg)
    trials_out = None
    if args.out:
        out = Path(args.out)
        trials_out = out.with_name(out.stem + "_trials" + (out.suffix or ".csv"))
    harness.run_e2e_sweep(sc, args.out or sys.stdout, trials_out)
    return 0


COMMANDS = {
    "capacity": (cmd_capacity, "capacity, p_eff, gamma and regime at one point (JSON)"),
    "regime-curves": (cmd_regime_curves, "blue/green regime boundaries over a log-spaced p grid (CSV)"),
    "lemma1": (cmd_lemma1, "random full-rank probability vs the exact product (CSV)"),
    "lemma2": (cmd_lemma2, "incorrect/correct consistency-graph edge counts vs M (CSV)"),
    "pair-consistency": (cmd_pair_consistency, "pairwise consistency frequency vs formula (CSV)"),
    "cluster-count": (cmd_cluster_count, "cluster-count deviation frequency vs Hoeffding bound (CSV)"),
    "simulate": (cmd_simulate, "end-to-end rate sweep with genie and exhaustive decoders (CSV)"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dnabec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, help="root seed (u64)")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--trials", type=int, help="trials per cell")
        sp.add_argument("--budget", type=int, help="max systems examined per exhaustive decode")
        sp.add_argument("--first-hit", action="store_true", help="stop exhaustive decoding at the first valid system")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    try:
        data = _overrides(args, load_config(args.config))
        return handler(Cfg(data), args)
    except ConfigError as exc:
        sys.stderr.write(json.dumps(exc.to_json()) + "\n")
        return 2
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "io", "location": exc.filename, "message": exc.strerror}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
