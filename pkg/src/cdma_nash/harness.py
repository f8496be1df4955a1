"""Experiment orchestration and record emission behind the `simulate` CLI.

Each experiment streams :class:`ExperimentRecord` rows: one per
(trial, user) plus one aggregate row per group, where a group is one
(trial, path count, filter, variant) combination.  Trials are
independent work items; with ``workers > 1`` they run in a process pool,
and because every random quantity comes from a substream keyed by
(seed, trial, ...), the emitted records are identical for any worker
count and stable under trial-count changes.
"""
from __future__ import annotations

import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from itertools import permutations
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from cdma_nash import rng
from cdma_nash.allocation import (DecodingOrder, FilterKind, pa_equilibrium,
                                  pa_sic_closed, pa_sic_recursive,
                                  rank_by_energy, total_power)
from cdma_nash.asymptotics import (capacity_mmse, capacity_opt_from_mmse,
                                   capacity_opt_integral, flat_profile,
                                   solve_beta_sic)
from cdma_nash.channel import (SystemRealization, dft_gains, sample_multipath,
                               sample_spreading, total_energy)
from cdma_nash.errors import (InfeasibleLoad, InvalidParameter,
                              NoSolutionInBracket, UsageError)
from cdma_nash.game import goodput, solve_beta_plus, solve_beta_star
from cdma_nash.receivers import InterferenceSet, sinr_mf, sinr_mmse_approx, sinr_mmse_exact

RECORD_FIELDS = ("experiment", "trial", "user", "rank", "L", "alpha",
                 "filter", "ordering", "power", "sinr", "utility", "flag")

EXPERIMENTS = ("theory-vs-sim", "utility-vs-L", "inverse-power-vs-alpha",
               "ordering-gain-vs-L", "property-suite")

_DEFAULT_FILTERS = {
    "theory-vs-sim": (FilterKind.MF, FilterKind.MMSE, FilterKind.OPT),
    "utility-vs-L": (FilterKind.MF, FilterKind.MMSE, FilterKind.OPT),
    "inverse-power-vs-alpha": (FilterKind.MF, FilterKind.MMSE, FilterKind.OPT,
                               FilterKind.MMSE_SIC),
    "ordering-gain-vs-L": (FilterKind.MF_SIC, FilterKind.MMSE_SIC),
}
_ALLOWED_FILTERS = {
    "theory-vs-sim": (FilterKind.MF, FilterKind.MMSE, FilterKind.OPT),
    "utility-vs-L": (FilterKind.MF, FilterKind.MMSE, FilterKind.OPT),
    "inverse-power-vs-alpha": tuple(FilterKind),
    "ordering-gain-vs-L": (FilterKind.MF_SIC, FilterKind.MMSE_SIC),
}

DEFAULT_ALPHA_SWEEP = tuple(round(0.100 + 0.005 * i, 3) for i in range(9))

ORDERINGS = ("random", "decreasing", "increasing")


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    trial: int
    user: int
    rank: int
    L: int
    alpha: float
    filter: str
    ordering: str
    power: float
    sinr: float
    utility: float
    flag: str = ""


@dataclass
class ExperimentConfig:
    experiment: str
    K: int = 32
    N: int = 256
    L: int | tuple[int, ...] = 8
    sigma2: float = 1e-10
    M: int = 100
    trials: int = 1000
    seed: int = 1
    filter: str | tuple[str, ...] = "all"
    ordering: str = "random"
    alpha_sweep: tuple[float, ...] | None = None
    output: str | None = None
    format: str = "csv"
    workers: int = 1


def _validate_config(cfg: ExperimentConfig):
    if cfg.experiment not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {cfg.experiment!r}; "
                         f"choose from {', '.join(EXPERIMENTS)}")
    if cfg.K < 1 or cfg.N < 1:
        raise UsageError(f"need K >= 1 and N >= 1, got K={cfg.K}, N={cfg.N}")
    if cfg.trials < 1:
        raise UsageError(f"trials must be >= 1, got {cfg.trials}")
    if not cfg.sigma2 > 0:
        raise UsageError(f"sigma2 must be positive, got {cfg.sigma2}")
    if cfg.M < 2:
        raise UsageError(f"M must be >= 2, got {cfg.M}")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise UsageError(f"seed must fit an unsigned 64-bit integer, got {cfg.seed}")
    if cfg.ordering not in ORDERINGS:
        raise UsageError(f"ordering must be one of {ORDERINGS}, got {cfg.ordering!r}")
    if cfg.format not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.workers < 1:
        raise UsageError(f"workers must be >= 1, got {cfg.workers}")
    for L in _as_tuple(cfg.L):
        if int(L) != L or L < 1:
            raise UsageError(f"L entries must be integers >= 1, got {cfg.L!r}")
    if cfg.alpha_sweep is not None and any(not a > 0 for a in cfg.alpha_sweep):
        raise UsageError(f"alpha sweep values must be positive, got {cfg.alpha_sweep!r}")


def _as_tuple(value) -> tuple:
    return tuple(value) if isinstance(value, (tuple, list)) else (value,)


def _resolve_filters(cfg: ExperimentConfig) -> tuple[FilterKind, ...]:
    allowed = _ALLOWED_FILTERS[cfg.experiment]
    if cfg.filter == "all":
        return _DEFAULT_FILTERS[cfg.experiment]
    kinds = []
    for label in _as_tuple(cfg.filter):
        try:
            kind = FilterKind.from_label(label)
        except InvalidParameter as exc:
            raise UsageError(str(exc)) from exc
        if kind not in allowed:
            raise UsageError(
                f"filter {label!r} is not valid for {cfg.experiment}; "
                f"allowed: {', '.join(k.value for k in allowed)}")
        kinds.append(kind)
    return tuple(kinds)


# ---------------------------------------------------------------------------
# per-trial building blocks

def _draw_energies(cfg: ExperimentConfig, trial: int, L: int):
    channels = [sample_multipath(L, 1.0, rng.channel_stream(cfg.seed, trial, k))
                for k in range(cfg.K)]
    energies = np.array([total_energy(ch) for ch in channels])
    return channels, energies


def _draw_system(cfg: ExperimentConfig, trial: int, L: int):
    channels, energies = _draw_energies(cfg, trial, L)
    gains = np.column_stack([dft_gains(ch, cfg.N) for ch in channels])
    codes = sample_spreading(cfg.N, cfg.K, rng.spreading_stream(cfg.seed, trial))
    return energies, gains, codes


def _realized_sinrs(sysr: SystemRealization, kind: FilterKind) -> np.ndarray:
    if kind is FilterKind.MF:
        return np.array([sinr_mf(sysr, k, InterferenceSet.all_except(k, sysr.K))
                         for k in range(sysr.K)])
    if kind in (FilterKind.MMSE, FilterKind.OPT):
        return sinr_mmse_approx(sysr, "full")
    if kind is FilterKind.MMSE_SIC:
        return sinr_mmse_approx(sysr, "sic-order")
    return np.array([sinr_mf(sysr, k, InterferenceSet.decoded_after(k, sysr.K))
                     for k in range(sysr.K)])


def _group(experiment, trial, users, ranks, L, alpha, kind, ordering_label,
           powers, sinrs, utilities, flag="") -> list[ExperimentRecord]:
    rows = [ExperimentRecord(experiment, trial, int(u), int(r), int(L), float(alpha),
                             kind.value, ordering_label, float(p), float(s),
                             float(ut), flag)
            for u, r, p, s, ut in zip(users, ranks, powers, sinrs, utilities)]
    agg_flag = "aggregate" if flag == "" else f"{flag}-aggregate"
    rows.append(ExperimentRecord(
        experiment, trial, -1, 0, int(L), float(alpha), kind.value, ordering_label,
        float(np.mean(powers)), float(np.mean(sinrs)), float(np.mean(utilities)),
        agg_flag))
    return rows


def _infeasible(experiment, trial, L, alpha, kind, ordering_label) -> ExperimentRecord:
    nan = float("nan")
    return ExperimentRecord(experiment, trial, -1, 0, int(L), float(alpha),
                            kind.value, ordering_label, nan, nan, nan, "infeasible")


def _trial_theory_vs_sim(cfg: ExperimentConfig, ctx: dict, trial: int,
                         with_uniform: bool = False) -> list[ExperimentRecord]:
    util = goodput(cfg.M)
    alpha = cfg.K / cfg.N
    users = np.arange(cfg.K)
    ranks = np.zeros(cfg.K, dtype=int)
    recs: list[ExperimentRecord] = []
    for L in ctx["L_list"]:
        energies, gains, codes = _draw_system(cfg, trial, L)
        for kind in ctx["filters"]:
            bp = ctx.get("beta_plus") if kind is FilterKind.OPT else None
            try:
                pa = pa_equilibrium(energies, kind, ctx["beta_star"], alpha,
                                    cfg.sigma2, beta_plus=bp)
            except InfeasibleLoad:
                recs.append(_infeasible(cfg.experiment, trial, L, alpha, kind, "none"))
                continue
            variants = [("", pa.powers)]
            if with_uniform:
                variants.append(("uniform", np.full(cfg.K, pa.powers.mean())))
            for flag, powers in variants:
                sysr = SystemRealization(freq_gains=gains, spreading=codes,
                                         powers=powers, sigma2=cfg.sigma2)
                sinrs = _realized_sinrs(sysr, kind)
                utilities = np.asarray(util.gamma(sinrs)) / powers
                recs += _group(cfg.experiment, trial, users, ranks, L, alpha,
                               kind, "none", powers, sinrs, utilities, flag)
    return recs


def _trial_utility_vs_l(cfg: ExperimentConfig, ctx: dict, trial: int):
    return _trial_theory_vs_sim(cfg, ctx, trial, with_uniform=True)


def _trial_inverse_power(cfg: ExperimentConfig, ctx: dict, trial: int):
    util = goodput(cfg.M)
    L = ctx["L_single"]
    _, energies = _draw_energies(cfg, trial, L)
    if cfg.ordering == "random":
        seq = rng.ordering_stream(cfg.seed, trial).permutation(cfg.K)
    else:
        seq = np.array(rank_by_energy(energies, cfg.ordering).sequence())
    sic_ranks = np.arange(1, cfg.K + 1)
    flat_ranks = np.zeros(cfg.K, dtype=int)
    users = np.arange(cfg.K)
    recs: list[ExperimentRecord] = []
    for alpha in ctx["sweep"]:
        for kind in ctx["filters"]:
            if kind.is_sic:
                pa = pa_sic_closed(energies[seq], kind, ctx["beta_star"],
                                   cfg.sigma2, N=cfg.K / alpha)
                target = ctx["beta_star"]
                group_users, group_ranks = seq, sic_ranks
                olabel = cfg.ordering
            else:
                bp = ctx.get("beta_plus") if kind is FilterKind.OPT else None
                try:
                    pa = pa_equilibrium(energies, kind, ctx["beta_star"], alpha,
                                        cfg.sigma2, beta_plus=bp)
                except InfeasibleLoad:
                    recs.append(_infeasible(cfg.experiment, trial, L, alpha,
                                            kind, "none"))
                    continue
                target = bp if kind is FilterKind.OPT else ctx["beta_star"]
                group_users, group_ranks = users, flat_ranks
                olabel = "none"
            sinrs = np.full(cfg.K, target)
            utilities = np.asarray(util.gamma(sinrs)) / pa.powers
            recs += _group(cfg.experiment, trial, group_users, group_ranks, L,
                           alpha, kind, olabel, pa.powers, sinrs, utilities)
    return recs


def _trial_ordering_gain(cfg: ExperimentConfig, ctx: dict, trial: int):
    util = goodput(cfg.M)
    alpha = cfg.K / cfg.N
    sic_ranks = np.arange(1, cfg.K + 1)
    ostream = rng.ordering_stream(cfg.seed, trial)
    recs: list[ExperimentRecord] = []
    for L in ctx["L_list"]:
        energies, gains, codes = _draw_system(cfg, trial, L)
        arms = (("random", ostream.permutation(cfg.K)),
                ("decreasing", np.array(rank_by_energy(energies, "decreasing").sequence())))
        for kind in ctx["filters"]:
            for olabel, seq in arms:
                pa = pa_sic_closed(energies[seq], kind, ctx["beta_star"],
                                   cfg.sigma2, N=cfg.N)
                sysr = SystemRealization(freq_gains=gains[:, seq],
                                         spreading=codes[:, seq],
                                         powers=pa.powers, sigma2=cfg.sigma2)
                sinrs = _realized_sinrs(sysr, kind)
                utilities = np.asarray(util.gamma(sinrs)) / pa.powers
                recs += _group(cfg.experiment, trial, seq, sic_ranks, L, alpha,
                               kind, olabel, pa.powers, sinrs, utilities)
    return recs


_TRIAL_FNS = {
    "theory-vs-sim": _trial_theory_vs_sim,
    "utility-vs-L": _trial_utility_vs_l,
    "inverse-power-vs-alpha": _trial_inverse_power,
    "ordering-gain-vs-L": _trial_ordering_gain,
}


# ---------------------------------------------------------------------------
# property suite

def _check_unilateral_scaling(cfg) -> tuple:
    """Median SINR shift from one deviating user should scale like 1/N.

    The shift is pooled over every non-deviating user; the deviation is
    a fixed absolute power jump so its size does not depend on the
    deviator's fading draw.
    """
    beta_star = solve_beta_star(goodput(cfg.M)).beta_star
    btilde = beta_star / (1.0 + beta_star)
    sigma2, L, trials = 0.1, 4, 40
    medians = []
    for N in (64, 128):
        K = N // 8
        jump = 10.0 * sigma2 * beta_star / (1.0 - (K / N) * btilde)
        shifts = []
        for t in range(trials):
            channels = [sample_multipath(L, 1.0, rng.substream(cfg.seed, 9000 + N, t, k))
                        for k in range(K)]
            energies = np.array([total_energy(ch) for ch in channels])
            pa = pa_equilibrium(energies, FilterKind.MMSE, beta_star, K / N, sigma2)
            gains = np.column_stack([dft_gains(ch, N) for ch in channels])
            codes = sample_spreading(N, K, rng.substream(cfg.seed, 9100 + N, t))
            base = SystemRealization(freq_gains=gains, spreading=codes,
                                     powers=pa.powers, sigma2=sigma2)
            bumped_powers = pa.powers.copy()
            bumped_powers[0] += jump
            bumped = SystemRealization(freq_gains=gains, spreading=codes,
                                       powers=bumped_powers, sigma2=sigma2)
            for k in range(1, K):
                tagged = InterferenceSet.all_except(k, K)
                shifts.append(abs(sinr_mmse_exact(bumped, k, tagged)
                                  - sinr_mmse_exact(base, k, tagged)))
        medians.append(float(np.median(shifts)))
    ratio = medians[1] / medians[0]
    return ("unilateral-power-scaling", "mmse", L, 0.125, ratio, 0.5,
            abs(ratio - 0.5), 0.3 <= ratio <= 0.7)


def _check_gain_normalization(cfg) -> tuple:
    """|d[n]|^2 / E averages to 1 over fading draws."""
    L, N, n, draws = 4, 64, 1, 20000
    stream = rng.substream(cfg.seed, 9200)
    acc = 0.0
    for _ in range(draws):
        ch = sample_multipath(L, 1.0, stream)
        gains = dft_gains(ch, N)
        acc += abs(gains[n]) ** 2 / total_energy(ch)
    mean = acc / draws
    return ("gain-normalization", "none", L, 0.0, mean, 1.0,
            abs(mean - 1.0), abs(mean - 1.0) <= 1e-2)


def _check_capacity_identity(cfg) -> tuple:
    """The two optimum-capacity routes and the decoding sweep agree."""
    profile = flat_profile(alpha=0.5, sigma2=0.4, nf=96, nx=96)
    routes = (capacity_opt_integral(profile),
              capacity_opt_from_mmse(profile),
              capacity_mmse(solve_beta_sic(profile)))
    spread = (max(routes) - min(routes)) / abs(routes[0])
    return ("capacity-identity", "none", 0, 0.5, routes[1], routes[0],
            spread, spread < 1e-3)


def _check_sic_recursion(cfg) -> tuple:
    """Backward recursion reproduces the closed-form cancellation ladder."""
    stream = rng.substream(cfg.seed, 9300)
    beta_star = solve_beta_star(goodput(cfg.M)).beta_star
    worst = 0.0
    for _ in range(20):
        K = int(stream.integers(1, 49))
        N = int(stream.integers(K, 257))
        energies = stream.uniform(0.1, 3.0, K)
        for kind in (FilterKind.MF_SIC, FilterKind.MMSE_SIC):
            closed = pa_sic_closed(energies, kind, beta_star, 1.0, N).powers
            recursive = pa_sic_recursive(energies, kind, beta_star, 1.0, N).powers
            worst = max(worst, float(np.max(np.abs(closed - recursive) / closed)))
    return ("sic-recursion-closed-form", "mmse-sic", 0, 0.0, worst, 0.0,
            worst, worst <= 1e-12)


def _check_ordering_optimality(cfg) -> tuple:
    """Decreasing-energy decoding spends the least total power of all K! orders."""
    stream = rng.substream(cfg.seed, 9400)
    beta_star = solve_beta_star(goodput(cfg.M)).beta_star
    K, hits, cases = 5, 0, 20
    for _ in range(cases):
        energies = stream.uniform(0.1, 3.0, K)
        best = rank_by_energy(energies, "decreasing").sequence()
        totals = {perm: total_power(pa_sic_closed(energies[list(perm)],
                                                  FilterKind.MMSE_SIC,
                                                  beta_star, 1.0, 16))
                  for perm in permutations(range(K))}
        if min(totals, key=totals.get) == best:
            hits += 1
    frac = hits / cases
    return ("ordering-optimality", "mmse-sic", 0, 0.0, frac, 1.0,
            1.0 - frac, hits == cases)


def _property_suite(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    checks = (_check_unilateral_scaling, _check_gain_normalization,
              _check_capacity_identity, _check_sic_recursion,
              _check_ordering_optimality)
    recs = []
    for index, check in enumerate(checks):
        name, kind_label, L, alpha, measured, reference, deviation, ok = check(cfg)
        recs.append(ExperimentRecord(
            experiment=cfg.experiment, trial=index, user=-1, rank=0, L=int(L),
            alpha=float(alpha), filter=kind_label, ordering="none",
            power=float(measured), sinr=float(reference),
            utility=float(deviation), flag=f"{'pass' if ok else 'fail'}:{name}"))
    return recs


# ---------------------------------------------------------------------------
# public entry points

def run_experiment(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Run one experiment; returns records sorted by (trial, user)."""
    _validate_config(cfg)
    if cfg.experiment == "property-suite":
        return _property_suite(cfg)
    filters = _resolve_filters(cfg)
    ctx: dict = {"filters": filters,
                 "beta_star": solve_beta_star(goodput(cfg.M)).beta_star}
    if cfg.experiment == "inverse-power-vs-alpha":
        if isinstance(cfg.L, (tuple, list)):
            raise UsageError("inverse-power-vs-alpha takes a single L")
        ctx["L_single"] = cfg.L
        ctx["sweep"] = cfg.alpha_sweep or DEFAULT_ALPHA_SWEEP
    else:
        ctx["L_list"] = _as_tuple(cfg.L)
    if FilterKind.OPT in filters:
        # the optimum receiver is calibrated once, at the configured load
        ctx["beta_plus"] = solve_beta_plus(ctx["beta_star"], cfg.K / cfg.N)
    fn = partial(_TRIAL_FNS[cfg.experiment], cfg, ctx)
    if cfg.workers > 1:
        chunk = max(1, cfg.trials // (4 * cfg.workers))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_trial = list(pool.map(fn, range(cfg.trials), chunksize=chunk))
    else:
        per_trial = [fn(t) for t in range(cfg.trials)]
    records = [rec for chunk_ in per_trial for rec in chunk_]
    records.sort(key=lambda r: (r.trial, r.user))
    return records


def solve_alpha_crossover(beta_star: float, *, calibration_alpha: float | None = 0.125,
                          tol: float = 1e-12) -> float:
    """Load at which the optimum filter stops beating MMSE cancellation.

    Equates the mean inverse equilibrium powers of the two receivers:

        a beta* b (1 - a beta+/(1+beta+)) = beta+ (1 - exp(-a b)),
        b = beta*/(1+beta*),

    and solves for the load a by bracketed bisection on (0, 1).  beta+ is
    pinned at ``calibration_alpha``, the load the optimum receiver was
    designed for.  Re-solving beta+ at every candidate load
    (``calibration_alpha=None``) makes the two sides tangent to second
    order, the gap stays one-signed, and no root exists; that reading
    raises NoSolutionInBracket.  Degenerate targets (beta* near 0) push
    the bracket to the domain edge and also fail with
    NoSolutionInBracket rather than returning an extrapolated load.
    """
    if not beta_star > 0:
        raise InvalidParameter(f"beta* must be positive, got {beta_star!r}")
    btilde = beta_star / (1.0 + beta_star)
    bp0 = None
    if calibration_alpha is not None:
        bp0 = solve_beta_plus(beta_star, calibration_alpha)

    def gap(a: float) -> float:
        bp = bp0 if bp0 is not None else solve_beta_plus(beta_star, a)
        return (a * beta_star * btilde * (1.0 - a * bp / (1.0 + bp))
                - bp * (1.0 - math.exp(-a * btilde)))

    seen_positive = False
    prev: tuple[float, float] | None = None
    for a in np.arange(0.005, 0.9951, 0.005):
        val = gap(float(a))
        if val > 0.0:
            seen_positive = True
        elif seen_positive and val < 0.0:
            return float(brentq(gap, prev[0], float(a), xtol=tol, rtol=8.9e-16))
        prev = (float(a), val)
    raise NoSolutionInBracket(
        f"inverse-power curves of the optimum and cancelling receivers do not "
        f"cross on (0, 1) for beta*={beta_star!r} "
        f"(calibration_alpha={calibration_alpha!r})")


def _row_values(rec: ExperimentRecord) -> list:
    return [rec.experiment, rec.trial, rec.user, rec.rank, rec.L,
            float(rec.alpha), rec.filter, rec.ordering, float(rec.power),
            float(rec.sinr), float(rec.utility), rec.flag]


def emit_records(records: Sequence[ExperimentRecord], format: str = "csv",
                 path: str | None = None):
    """Write records as CSV (fixed header) or JSON lines.

    Floats are rendered as shortest round-trip decimals.  ``path`` None
    or "-" writes to stdout.
    """
    if format not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {format!r}")

    def _write(fh):
        if format == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RECORD_FIELDS)
            for rec in records:
                writer.writerow([v if isinstance(v, str) else repr(v) if isinstance(v, float) else str(v)
                                 for v in _row_values(rec)])
        else:
            for rec in records:
                fh.write(json.dumps(dict(zip(RECORD_FIELDS, _row_values(rec)))))
                fh.write("\n")

    if path is None or path == "-":
        _write(sys.stdout)
        return
    try:
        with open(path, "w", newline="") as fh:
            _write(fh)
    except OSError as exc:
        raise OSError(f"cannot write records to {path!r}: {exc}") from exc
