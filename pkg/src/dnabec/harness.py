"""Seeded Monte Carlo campaigns and CSV/JSON persistence.

A root seed expands into per-cell and per-trial seeds through
``SeedSequence(root, spawn_key=counters)``, so any row can be replayed on
its own and results do not depend on execution order.
"""

from __future__ import annotations

import csv
import io
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import codec, gf2
from .channel import (
    ChannelParams,
    SamplingDistribution,
    beta_blue,
    beta_green,
    boundary_curves,
    capacity,
    capacity_from_draw_capacity,
    capacity_from_peff,
    expected_draw_capacity,
    gamma,
    p_eff,
    random_reads,
    regime,
    sample_draw_counts,
    transmit,
)
from .cluster import build_graph, consistent, edge_stats, pair_consistency_probability
from .errors import ConfigError

CAPACITY_TOL = 1e-12


def trial_seed(root: int, *counters: int) -> int:
    """Counter-based child seed (u64) of ``root``."""
    ss = np.random.SeedSequence(root, spawn_key=tuple(counters))
    return int(ss.generate_state(1, np.uint64)[0])


def trial_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def write_csv(rows: Sequence[Mapping[str, Any]], out: str | Path | io.TextIOBase | None, header: Sequence[str] | None = None) -> str:
    """Write rows as RFC 4180 CSV (CRLF, header first). Returns the text."""
    if header is None:
        header = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(header), lineterminator="\r\n", extrasaction="raise")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    text = buf.getvalue()
    if isinstance(out, (str, Path)):
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)
    elif out is not None:
        out.write(text)
    return text


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------- capacity


def run_capacity_query(p: float, beta: float, dist: SamplingDistribution) -> dict:
    """Capacity, p_eff, gamma and regime at one parameter point.

    The capacity is evaluated both from the per-draw BEC capacities and from
    p_eff; the two must agree.
    """
    via_draws = capacity_from_draw_capacity(dist, p, beta)
    via_peff = capacity_from_peff(dist, p, beta)
    if abs(via_draws - via_peff) > CAPACITY_TOL:
        raise RuntimeError(f"capacity forms disagree: {via_draws!r} vs {via_peff!r}")
    return {
        "p": p,
        "beta": beta,
        "distribution": list(dist.pmf),
        "q0": dist.q0,
        "p_eff": p_eff(dist, p),
        "expected_draw_capacity": expected_draw_capacity(dist, p),
        "capacity": capacity(dist, p, beta),
        "gamma": gamma(p, beta),
        "regime": regime(p, beta).value,
        "beta_blue": beta_blue(p),
        "beta_green": beta_green(p),
    }


# ---------------------------------------------------------------- regime curves


def run_regime_curves(p_min: float, p_max: float, n_points: int, out=None) -> list[dict]:
    if not 0.0 < p_min < p_max < 1.0:
        raise ConfigError("need 0 < p_min < p_max < 1")
    if n_points < 2:
        raise ConfigError("n_points must be at least 2")
    grid = np.geomspace(p_min, p_max, n_points)
    rows = [{"p": p, "beta_blue": b, "beta_green": g} for p, b, g in boundary_curves(grid)]
    write_csv(rows, out, ["p", "beta_blue", "beta_green"])
    return rows


# ---------------------------------------------------------------- full-rank probability


def run_lemma1(B_list: Sequence[int], delta_list: Sequence[float], trials: int, seed: int, out=None) -> list[dict]:
    rows = []
    for i, B in enumerate(B_list):
        for j, delta in enumerate(delta_list):
            cell_seed = trial_seed(seed, i, j)
            k = gf2.fullrank_rows(B, delta)
            emp = gf2.fullrank_probability_trial(B, delta, trials, trial_rng(cell_seed))
            exact = gf2.fullrank_probability_exact(B, k)
            se = math.sqrt(exact * (1.0 - exact) / trials)
            rows.append(
                {
                    "B": B,
                    "delta": delta,
                    "rows": k,
                    "trials": trials,
                    "seed": cell_seed,
                    "empirical": emp,
                    "exact": exact,
                    "stderr": se,
                    "z": (emp - exact) / se if se > 0 else (0.0 if emp == exact else math.inf),
                }
            )
    write_csv(rows, out)
    return rows


# ---------------------------------------------------------------- pair consistency


def pair_consistency_trial(p: float, L: int, pairs: int, rng: np.random.Generator) -> int:
    """Count consistent pairs among ``pairs`` pairs of independent random reads."""
    a = random_reads(pairs, L, p, rng)
    b = random_reads(pairs, L, p, rng)
    return sum(consistent(x, y) for x, y in zip(a, b))


def run_pair_consistency(cells: Sequence[tuple[float, int]], pairs: int, seed: int, out=None) -> list[dict]:
    rows = []
    for i, (p, L) in enumerate(cells):
        cell_seed = trial_seed(seed, i)
        hits = pair_consistency_trial(p, L, pairs, trial_rng(cell_seed))
        exact = pair_consistency_probability(p, L)
        se = math.sqrt(exact * (1.0 - exact) / pairs)
        emp = hits / pairs
        rows.append(
            {
                "p": p,
                "L": L,
                "pairs": pairs,
                "seed": cell_seed,
                "consistent": hits,
                "empirical": emp,
                "exact": exact,
                "stderr": se,
                "z": (emp - exact) / se if se > 0 else 0.0,
            }
        )
    write_csv(rows, out)
    return rows


# ---------------------------------------------------------------- cluster count


def run_cluster_count(
    M: int,
    epsilon: float,
    dists: Sequence[SamplingDistribution],
    trials: int,
    seed: int,
    out=None,
) -> list[dict]:
    """Frequency of the nonempty-cluster count straying more than ``eps*M`` from ``(1-q0)M``."""
    rows = []
    bound = codec.cluster_count_bound(M, epsilon)
    for i, dist in enumerate(dists):
        cell_seed = trial_seed(seed, i)
        rng = trial_rng(cell_seed)
        counts = np.array([(sample_draw_counts(dist, M, rng) > 0).sum() for _ in range(trials)])
        dev = np.abs(counts - (1.0 - dist.q0) * M)
        violations = int((dev > epsilon * M).sum())
        rows.append(
            {
                "distribution": dist.name or "pmf",
                "q0": dist.q0,
                "M": M,
                "epsilon": epsilon,
                "trials": trials,
                "seed": cell_seed,
                "mean_clusters": float(counts.mean()),
                "violations": violations,
                "empirical": violations / trials,
                "bound": bound,
            }
        )
    write_csv(rows, out)
    return rows


# ---------------------------------------------------------------- consistency-graph edges


def lemma2_params(M: int, p: float, beta: float) -> ChannelParams:
    """Channel at ``L = round(beta log2 M)``; beta is re-derived from the integer L."""
    L = max(1, round(beta * math.log2(M)))
    return ChannelParams(M, L, p)


def lemma2_trial(params: ChannelParams, dist: SamplingDistribution, B: int, seed: int) -> dict:
    rng = trial_rng(seed)
    cb = codec.build_codebook(params, B, 2, rng)
    pool = transmit(codec.encode(cb, 0), params, dist, rng)
    g = build_graph(pool.view())
    stats = edge_stats(g, pool.origins, params)
    return {"reads": len(pool), "U": g.edge_count, "correct": stats.correct_edges, "Z": stats.incorrect_edges}


def run_lemma2(
    M_list: Sequence[int],
    p: float,
    beta: float,
    dist: SamplingDistribution,
    trials: int,
    seed: int,
    out=None,
    epsilon: float = codec.DEFAULT_EPSILON,
) -> list[dict]:
    rows = []
    for i, M in enumerate(M_list):
        params = lemma2_params(M, p, beta)
        g = params.gamma
        if g <= 1.0:
            warnings.warn(f"gamma={g:.3f} <= 1 at M={M}: outside the regime where incorrect edges vanish")
        B = codec.choose_B(params, dist, epsilon)
        res = [lemma2_trial(params, dist, B, trial_seed(seed, i, t)) for t in range(trials)]
        Z = np.array([r["Z"] for r in res], dtype=float)
        correct = np.array([r["correct"] for r in res], dtype=float)
        U = np.array([r["U"] for r in res], dtype=float)
        rows.append(
            {
                "M": M,
                "L": params.L,
                "beta": params.beta,
                "gamma": g,
                "B": B,
                "trials": trials,
                "seed": seed,
                "mean_reads": float(np.mean([r["reads"] for r in res])),
                "mean_Z": float(Z.mean()),
                "p95_Z": float(np.percentile(Z, 95)),
                "bound_Z": M ** (2.0 - g),
                "bound_Z_slack": M ** (2.5 - g),
                "mean_correct": float(correct.mean()),
                "bound_correct": M / 2.0 * dist.second_moment(),
                "mean_U_over_M": float(U.mean() / M),
            }
        )
    write_csv(rows, out)
    return rows


# ---------------------------------------------------------------- end to end


@dataclass
class SweepConfig:
    M: int
    L: int
    p: float
    dist: SamplingDistribution
    rates: list[float]
    num_messages: int = 16
    trials: int = 100
    seed: int = 0
    budget: int = 1_000_000
    epsilon: float = codec.DEFAULT_EPSILON
    alpha: float = 0.0
    first_hit: bool = False
    exhaustive: bool = True
    max_strands: int = 8
    max_reads: int = 16
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1", "trials")
        if self.exhaustive and self.M > self.max_strands:
            raise ConfigError(
                f"exhaustive decoding needs M <= {self.max_strands}; set exhaustive=false for genie-only runs", "M"
            )
        self.params  # validates channel parameters

    @property
    def params(self) -> ChannelParams:
        return ChannelParams(self.M, self.L, self.p)


@dataclass(frozen=True)
class RatePoint:
    """Nominal rate and the message length used to realise it."""

    R: float
    B: int
    feasible: bool


def rate_point(cfg: SweepConfig, R: float) -> RatePoint:
    """B is the collision-safe length, capped at ML; a rate with more than 2^B messages is infeasible."""
    params = cfg.params
    B = min(params.n_bits, codec.collision_safe_B(params, cfg.dist, R, cfg.epsilon, cfg.alpha))
    return RatePoint(R, B, params.n_bits * R <= B + 1e-9)


def run_trial(cfg: SweepConfig, point: RatePoint, seed: int) -> dict:
    """One channel use decoded by both decoders; fully determined by ``seed``."""
    start = time.perf_counter()
    rec: dict[str, Any] = {"seed": seed, "R": point.R, "B": point.B, "M": cfg.M, "L": cfg.L, "p": cfg.p}
    if not point.feasible:
        rec.update(sent=-1, reads=0, genie="rate_infeasible", genie_index=-1, genie_ok=0,
                   exhaustive="rate_infeasible", exhaustive_index=-1, exhaustive_ok=0, systems_tried=0)
    else:
        rng = trial_rng(seed)
        params = cfg.params
        cb = codec.build_codebook(params, point.B, cfg.num_messages, rng)
        sent = int(rng.integers(cfg.num_messages))
        pool = transmit(codec.encode(cb, sent), params, cfg.dist, rng)
        genie = codec.genie_decode(cb, pool)
        rec.update(sent=sent, reads=len(pool), genie=genie.status.value,
                   genie_index=_idx(genie), genie_ok=int(_correct(cb, genie, sent)))
        if cfg.exhaustive and len(pool) <= cfg.max_reads:
            ex = codec.exhaustive_decode(
                cb, pool.view(), cfg.dist, cfg.epsilon, cfg.budget, cfg.first_hit, cfg.max_strands, cfg.max_reads
            )
            rec.update(exhaustive=ex.status.value, exhaustive_index=_idx(ex),
                       exhaustive_ok=int(_correct(cb, ex, sent)), systems_tried=ex.systems_tried)
        else:
            rec.update(exhaustive="skipped", exhaustive_index=-1, exhaustive_ok=0, systems_tried=0)
    if cfg.timing:
        rec["wall_time"] = time.perf_counter() - start
    return rec


def _idx(res: codec.DecodeResult) -> int:
    return -1 if res.message_index is None else res.message_index


def _correct(cb: codec.Codebook, res: codec.DecodeResult, sent: int) -> bool:
    return res.status is codec.DecodeStatus.SUCCESS and cb.message_int(res.message_index) == cb.message_int(sent)


def _run_one(args):
    cfg, point, seed = args
    return run_trial(cfg, point, seed)


def run_e2e_sweep(cfg: SweepConfig, out=None, trials_out=None) -> tuple[list[dict], list[dict]]:
    """Error rates of both decoders over a rate grid.

    Budget-exhausted and guard-skipped trials are reported in their own
    columns and excluded from the exhaustive error rate.
    """
    jobs = []
    for i, R in enumerate(cfg.rates):
        point = rate_point(cfg, R)
        jobs.extend((cfg, point, trial_seed(cfg.seed, i, t)) for t in range(cfg.trials))
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=8))
    else:
        records = [_run_one(j) for j in jobs]

    summary = []
    for i, R in enumerate(cfg.rates):
        recs = records[i * cfg.trials : (i + 1) * cfg.trials]
        for r in recs:
            r["rate_index"] = i
        exhausted = sum(r["exhaustive"] == codec.DecodeStatus.BUDGET_EXHAUSTED.value for r in recs)
        skipped = sum(r["exhaustive"] == "skipped" for r in recs)
        decided = [r for r in recs if r["exhaustive"] not in (codec.DecodeStatus.BUDGET_EXHAUSTED.value, "skipped")]
        summary.append(
            {
                "R": R,
                "B": recs[0]["B"],
                "trials": cfg.trials,
                "error_rate": (1.0 - sum(r["exhaustive_ok"] for r in decided) / len(decided)) if decided else math.nan,
                "genie_error_rate": 1.0 - sum(r["genie_ok"] for r in recs) / len(recs),
                "budget_exhausted": exhausted,
                "skipped": skipped,
                "ambiguous": sum(r["exhaustive"] == codec.DecodeStatus.AMBIGUOUS.value for r in recs),
                "mean_systems_tried": float(np.mean([r["systems_tried"] for r in decided])) if decided else math.nan,
                "infeasible": int(recs[0]["genie"] == "rate_infeasible"),
            }
        )
    write_csv(summary, out)
    header = ["rate_index", "seed", "R", "B", "M", "L", "p", "sent", "reads", "genie", "genie_index", "genie_ok",
              "exhaustive", "exhaustive_index", "exhaustive_ok", "systems_tried"]
    if cfg.timing:
        header.append("wall_time")
    write_csv(records, trials_out, header)
    return summary, records
