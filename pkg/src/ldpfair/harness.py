"""Experiment orchestration.

A declarative config names an experiment family, a dataset, the privacy /
fairness sweeps, and a master seed; the harness simulates the population,
mounts the configured attack, and emits per-repetition rows plus
repetition-averaged summaries as CSV, with a JSON manifest sufficient to
reproduce the run bit-exactly.

Experiment families:
  BIA_DISPARITY  per-subpopulation inference ASR under OLH
  MGA_DISPARITY  per-attacker-subpopulation poisoning ULoss under OLH
  FOLH_BIA       BIA disparity under F-OLH across rho
  FOLH_MGA       poisoning ULoss under F-OLH across rho, with OLH baseline
  TIMING         user-side report-generation cost, OLH vs F-OLH
  DISTORTION     per-item true vs attacked estimates, OLH vs F-OLH
  RHO_ADVISOR    preimage statistics for threshold selection
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .datasets import Dataset, gen_gaussian, gen_uniform, load_dataset, true_frequencies
from .metrics import asr as asr_metric
from .metrics import clipped_uloss, rho_advisor, uloss
from .populations import GROUP_NAMES, HIGH_ENT, HIGH_PIS, LOW_PIS, assign_from_arrays
from .protocols import InfeasibleRho, ProtocolParams, derive_g
from .rng import PURPOSE_DATASET, Stream, derive_stream, stream_seed
from .simulate import (
    SimulatedReports,
    bia_attack,
    craft_fixed_hash_targets,
    craft_search,
    estimate_from_run,
    select_members,
    simulate_reports,
)

KINDS = (
    "BIA_DISPARITY",
    "MGA_DISPARITY",
    "FOLH_BIA",
    "FOLH_MGA",
    "TIMING",
    "DISTORTION",
    "RHO_ADVISOR",
)

MGA_MODES = ("self", "fixed_hash", "search")

_GROUP_SALTS = {HIGH_ENT: 1, LOW_PIS: 2, HIGH_PIS: 3}

#: columns averaged across repetitions in summary.csv; everything else keys a group
AGGREGATE_COLUMNS = frozenset(
    {
        "asr",
        "uloss",
        "uloss_no_attack",
        "uloss_excess",
        "uloss_clipped",
        "uloss_clipped_no_attack",
        "uloss_clipped_excess",
        "total_seconds",
        "per_user_seconds",
        "mean_draws",
        "f_true",
        "f_olh_attacked",
        "f_folh_attacked",
    }
)


class ConfigError(Exception):
    """The experiment config does not validate."""


class InfeasibleSweep(Exception):
    """Every sweep point of the run was infeasible."""


def derive_user_rng(master_seed: int, repetition: int, user_index: int, purpose_tag: int) -> Stream:
    """Independent deterministic stream for one (repetition, user, purpose).

    Distinct triples yield independent streams; identical triples replay the
    identical draws, which is what makes parallel and sequential schedules
    emit byte-identical results.
    """
    return derive_stream(master_seed, repetition, user_index, purpose_tag)


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment sweep."""

    kind: str
    dataset: dict[str, Any] = field(default_factory=dict)
    epsilons: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 3.0])
    rhos: list[float] | None = None
    protocol: str = "olh"
    n_observations: int = 1
    malicious_fraction: float = 0.005
    malicious_count: int | None = None
    targets: Any = "ALL"
    kappa: int = 1000
    repetitions: int = 10
    subpop_fraction: float = 0.10
    master_seed: int = 0
    output_dir: str = "results"
    attacker_group: str = HIGH_PIS
    mga_mode: str | None = None
    max_draws: int = 10**6
    g_override: int | None = None
    domain_sizes: list[int] | None = None
    sample_users: int = 10_000
    workers: int = 1
    emit_user_details: bool = False

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            cfg = cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as f:
                raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(raw)

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.epsilons or any(e <= 0 for e in self.epsilons):
            raise ConfigError("epsilons must be a non-empty list of positive values")
        if self.rhos is not None and any(r < 1.0 for r in self.rhos):
            raise ConfigError("rho entries must be >= 1")
        if self.kind in ("FOLH_BIA", "FOLH_MGA") and not self.rhos:
            raise ConfigError(f"{self.kind} requires a rhos list")
        if not (1 <= self.n_observations <= 32):
            raise ConfigError("n_observations must be in [1, 32]")
        if self.mga_mode is not None and self.mga_mode not in MGA_MODES:
            raise ConfigError(f"mga_mode must be one of {MGA_MODES}")
        if self.attacker_group not in GROUP_NAMES:
            raise ConfigError(f"attacker_group must be one of {GROUP_NAMES}")
        if not (0 < self.subpop_fraction <= 1):
            raise ConfigError("subpop_fraction must be in (0, 1]")
        if self.malicious_count is None and not (0 <= self.malicious_fraction <= 1):
            raise ConfigError("malicious_fraction must be in [0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.kappa < 1:
            raise ConfigError("kappa must be >= 1")
        if not (0 <= self.master_seed < 2**64):
            raise ConfigError("master_seed must be an unsigned 64-bit integer")

    def resolved_mga_mode(self) -> str:
        """Crafting mode, defaulted per experiment family.

        Subpopulation experiments keep the attacker's own hash and promote
        their own preimage set ("self"); distortion curves use the
        free-search attack ("search").
        """
        if self.mga_mode is not None:
            return self.mga_mode
        return "search" if self.kind == "DISTORTION" else "self"


@dataclass
class RunResult:
    """Where the run landed on disk, plus the rows for programmatic use."""

    results_path: Path
    summary_path: Path
    manifest_path: Path
    header: list[str]
    rows: list[list[Any]]
    summary_rows: list[list[Any]]
    manifest: dict[str, Any]


def _resolve_dataset(config: ExperimentConfig, domain_size: int | None = None) -> Dataset:
    spec = dict(config.dataset)
    if "path" in spec:
        return load_dataset(spec["path"])
    generator = spec.pop("generator", "gaussian")
    salt = 0 if domain_size is None else domain_size
    rng = derive_stream(config.master_seed, 0, salt, PURPOSE_DATASET)
    if domain_size is not None:
        spec["domain_size"] = domain_size
    try:
        if generator == "gaussian":
            return gen_gaussian(rng=rng, **spec)
        if generator == "uniform":
            return gen_uniform(rng=rng, **spec)
    except TypeError as exc:
        raise ConfigError(f"bad dataset parameters: {exc}") from exc
    raise ConfigError(f"unknown dataset generator: {generator!r}")


def _attacker_count(config: ExperimentConfig, n_users: int) -> int:
    if config.malicious_count is not None:
        return config.malicious_count
    return max(1, int(round(config.malicious_fraction * n_users)))


def _targets_array(config: ExperimentConfig, domain_size: int) -> np.ndarray:
    if isinstance(config.targets, str):
        if config.targets.upper() == "ALL":
            return np.arange(domain_size, dtype=np.int64)
        raise ConfigError(f"targets must be 'ALL' or a list, got {config.targets!r}")
    return np.asarray(sorted(set(int(t) for t in config.targets)), dtype=np.int64)


def _params_for(config: ExperimentConfig, epsilon: float, rho: float | None) -> ProtocolParams:
    return ProtocolParams(
        epsilon=epsilon,
        g=config.g_override or 0,
        rho=rho,
        max_draws=config.max_draws,
    )


def _group_indices(assignment, group: str) -> np.ndarray:
    members = {
        HIGH_ENT: assignment.high_ent,
        LOW_PIS: assignment.low_pis,
        HIGH_PIS: assignment.high_pis,
    }[group]
    return np.sort(np.fromiter(members, dtype=np.int64, count=len(members)))


def _run_parallel(tasks: Sequence[Callable[[], list[list[Any]]]], workers: int) -> list[list[Any]]:
    if workers <= 1:
        chunks = [t() for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda t: t(), tasks))
    return [row for chunk in chunks for row in chunk]


def _crafted_reports(
    run: SimulatedReports,
    attackers: np.ndarray,
    config: ExperimentConfig,
    targets: np.ndarray,
    repetition: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Attacker seed/bucket arrays after crafting, replacing honest reports."""
    mode = config.resolved_mga_mode()
    if mode == "self":
        # each attacker promotes their own preimage set: report the true bucket
        return run.seeds[attackers], run.true_buckets[attackers]
    if mode == "fixed_hash":
        buckets = craft_fixed_hash_targets(run, attackers, targets)
        return run.seeds[attackers], buckets
    seeds, buckets, _ = craft_search(
        attackers, targets, config.kappa, run.params, run.domain_size,
        config.master_seed, repetition,
    )
    return seeds, buckets


def _attacked_estimates(
    run: SimulatedReports,
    attackers: np.ndarray,
    crafted: tuple[np.ndarray, np.ndarray],
) -> np.ndarray:
    seeds = run.seeds.copy()
    perturbed = run.perturbed.copy()
    seeds[attackers], perturbed[attackers] = crafted
    return estimate_from_run(run, seeds, perturbed)


# ---------------------------------------------------------------------------
# experiment families


def _bia_rows(
    config: ExperimentConfig, dataset: Dataset, protocol_points: list[tuple[float, float | None]]
) -> tuple[list[str], list[list[Any]], list[str]]:
    header = ["protocol", "epsilon", "rho", "repetition", "group", "asr"]
    values = dataset.values
    infeasible: list[str] = []

    def task(point: tuple[float, float | None], rep: int) -> Callable[[], list[list[Any]]]:
        eps, rho = point

        def work() -> list[list[Any]]:
            params = _params_for(config, eps, rho)
            rounds = [
                simulate_reports(values, dataset.domain_size, params,
                                 config.master_seed, rep, round_no=r)
                for r in range(config.n_observations)
            ]
            first = rounds[0]
            assignment = assign_from_arrays(
                np.arange(len(values)), first.e_comp, first.preimage_sizes,
                config.subpop_fraction,
            )
            preds, _, _ = bia_attack(rounds, dataset.domain_size, config.master_seed, rep)
            protocol = "folh" if rho is not None else "olh"
            rows = [[protocol, eps, rho, rep, "ALL", asr_metric(preds, values)]]
            for group in GROUP_NAMES:
                idx = _group_indices(assignment, group)
                rows.append([protocol, eps, rho, rep, group, asr_metric(preds[idx], values[idx])])
            return rows

        return work

    tasks = []
    for point in protocol_points:
        eps, rho = point
        if rho is not None:
            try:
                _check_point_feasible(config, dataset.domain_size, eps, rho)
            except InfeasibleRho as exc:
                infeasible.append(f"epsilon={eps} rho={rho}: {exc}")
                continue
        tasks.extend(task(point, rep) for rep in range(config.repetitions))
    rows = _run_parallel(tasks, config.workers)
    return header, rows, infeasible


def _check_point_feasible(
    config: ExperimentConfig, domain_size: int, epsilon: float, rho: float
) -> None:
    params = _params_for(config, epsilon, rho)
    from .protocols import check_rho_feasible

    check_rho_feasible(domain_size, params.g, rho)


def _mga_rows(
    config: ExperimentConfig,
    dataset: Dataset,
    protocol_points: list[tuple[float, float | None]],
    attacker_groups: Sequence[str],
) -> tuple[list[str], list[list[Any]], list[str]]:
    header = [
        "protocol", "epsilon", "rho", "repetition", "attacker_group",
        "uloss", "uloss_no_attack", "uloss_excess",
        "uloss_clipped", "uloss_clipped_no_attack", "uloss_clipped_excess",
    ]
    values = dataset.values
    f_true = true_frequencies(dataset)
    targets = _targets_array(config, dataset.domain_size)
    n_att = _attacker_count(config, len(values))
    infeasible: list[str] = []

    def task(point: tuple[float, float | None], rep: int) -> Callable[[], list[list[Any]]]:
        eps, rho = point

        def work() -> list[list[Any]]:
            params = _params_for(config, eps, rho)
            run = simulate_reports(values, dataset.domain_size, params,
                                   config.master_seed, rep)
            assignment = assign_from_arrays(
                np.arange(len(values)), run.e_comp, run.preimage_sizes,
                config.subpop_fraction,
            )
            base_est = estimate_from_run(run)
            base = uloss(base_est, f_true)
            base_clip = clipped_uloss(base_est, f_true)
            protocol = "folh" if rho is not None else "olh"
            rows = []
            for group in attacker_groups:
                idx = _group_indices(assignment, group)
                attackers = select_members(
                    idx, min(n_att, idx.size), config.master_seed, rep,
                    salt=_GROUP_SALTS[group],
                )
                crafted = _crafted_reports(run, attackers, config, targets, rep)
                est = _attacked_estimates(run, attackers, crafted)
                attacked = uloss(est, f_true)
                attacked_clip = clipped_uloss(est, f_true)
                rows.append([
                    protocol, eps, rho, rep, group,
                    attacked, base, attacked - base,
                    attacked_clip, base_clip, attacked_clip - base_clip,
                ])
            return rows

        return work

    tasks = []
    for point in protocol_points:
        eps, rho = point
        if rho is not None:
            try:
                _check_point_feasible(config, dataset.domain_size, eps, rho)
            except InfeasibleRho as exc:
                infeasible.append(f"epsilon={eps} rho={rho}: {exc}")
                continue
        tasks.extend(task(point, rep) for rep in range(config.repetitions))
    rows = _run_parallel(tasks, config.workers)
    return header, rows, infeasible


def _timing_rows(config: ExperimentConfig) -> tuple[list[str], list[list[Any]], list[str]]:
    header = [
        "protocol", "epsilon", "g", "rho", "domain_size", "repetition",
        "total_seconds", "per_user_seconds", "mean_draws",
    ]
    domain_sizes = config.domain_sizes or [None]
    rhos = config.rhos or []
    rows: list[list[Any]] = []
    infeasible: list[str] = []
    # timing stays single-threaded regardless of workers; wall clocks of
    # concurrent tasks would not be comparable
    for d in domain_sizes:
        dataset = _resolve_dataset(config, domain_size=d)
        values = dataset.values
        for eps in config.epsilons:
            points: list[float | None] = [None] + list(rhos)
            for rho in points:
                params = _params_for(config, eps, rho)
                if rho is not None:
                    try:
                        _check_point_feasible(config, dataset.domain_size, eps, rho)
                    except InfeasibleRho as exc:
                        infeasible.append(f"epsilon={eps} rho={rho} d={dataset.domain_size}: {exc}")
                        continue
                for rep in range(config.repetitions):
                    t0 = time.perf_counter()
                    run = simulate_reports(values, dataset.domain_size, params,
                                           config.master_seed, rep)
                    total = time.perf_counter() - t0
                    rows.append([
                        "folh" if rho is not None else "olh",
                        eps, params.g, rho, dataset.domain_size, rep,
                        total, total / len(values), float(run.draws_used.mean()),
                    ])
    return header, rows, infeasible


def _distortion_rows(
    config: ExperimentConfig, dataset: Dataset
) -> tuple[list[str], list[list[Any]], list[str]]:
    header = ["epsilon", "rho", "repetition", "item", "f_true",
              "f_olh_attacked", "f_folh_attacked"]
    values = dataset.values
    f_true = true_frequencies(dataset)
    targets = _targets_array(config, dataset.domain_size)
    n_att = _attacker_count(config, len(values))
    rhos = config.rhos or [1.01]
    infeasible: list[str] = []
    all_ids = np.arange(len(values), dtype=np.int64)

    def task(eps: float, rho: float, rep: int) -> Callable[[], list[list[Any]]]:
        def work() -> list[list[Any]]:
            est = {}
            for label, r in (("olh", None), ("folh", rho)):
                params = _params_for(config, eps, r)
                run = simulate_reports(values, dataset.domain_size, params,
                                       config.master_seed, rep)
                if n_att > 0:
                    attackers = select_members(all_ids, n_att, config.master_seed, rep, salt=0)
                    crafted = _crafted_reports(run, attackers, config, targets, rep)
                    seeds = run.seeds.copy()
                    perturbed = run.perturbed.copy()
                    seeds[attackers], perturbed[attackers] = crafted
                    est[label] = estimate_from_run(run, seeds, perturbed)
                else:
                    est[label] = estimate_from_run(run)
            return [
                [eps, rho, rep, int(v), float(f_true[v]),
                 float(est["olh"][v]), float(est["folh"][v])]
                for v in range(dataset.domain_size)
            ]

        return work

    tasks = []
    for eps in config.epsilons:
        for rho in rhos:
            try:
                _check_point_feasible(config, dataset.domain_size, eps, rho)
            except InfeasibleRho as exc:
                infeasible.append(f"epsilon={eps} rho={rho}: {exc}")
                continue
            tasks.extend(task(eps, rho, rep) for rep in range(config.repetitions))
    rows = _run_parallel(tasks, config.workers)
    return header, rows, infeasible


def _advisor_rows(
    config: ExperimentConfig, dataset: Dataset | None
) -> tuple[list[str], list[list[Any]], list[str]]:
    header = ["epsilon", "rho", "p_min", "p_max", "p_avg",
              "theoretical_avg", "mean_draws", "infeasible"]
    rows: list[list[Any]] = []
    domain_size = dataset.domain_size if dataset else None
    if domain_size is None:
        if not config.domain_sizes:
            raise ConfigError("RHO_ADVISOR needs a dataset or domain_sizes")
        domain_size = config.domain_sizes[0]
    values = dataset.values if dataset else None
    for eps_index, eps in enumerate(config.epsilons):
        rng = derive_stream(config.master_seed, eps_index, 0, 0)
        advisor = rho_advisor(
            domain_size, eps, config.rhos or [], config.sample_users, rng,
            values=values, max_draws=config.max_draws,
        )
        for r in advisor:
            label = "olh" if r.rho is None else r.rho
            if r.infeasible or r.stats is None:
                rows.append([eps, label, None, None, None, None, None, True])
            else:
                rows.append([
                    eps, label, r.stats.p_min, r.stats.p_max, r.stats.p_avg,
                    r.stats.theoretical_avg, r.mean_draws, False,
                ])
    return header, rows, []


# ---------------------------------------------------------------------------
# emission


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> None:
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_format_cell(c) for c in row) + "\n")


def _summarize(header: list[str], rows: list[list[Any]]) -> tuple[list[str], list[list[Any]]]:
    """Average numeric columns over repetitions, keyed by the other columns."""
    if "repetition" not in header:
        return header, rows
    rep_i = header.index("repetition")
    numeric = {i for i, name in enumerate(header) if name in AGGREGATE_COLUMNS}
    key_cols = [i for i in range(len(header)) if i != rep_i and i not in numeric]
    grouped: dict[tuple, list[list[Any]]] = {}
    order: list[tuple] = []
    for row in rows:
        key = tuple(row[i] for i in key_cols)
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(row)
    out_header = [h for i, h in enumerate(header) if i != rep_i]
    out_rows = []
    for key in order:
        group = grouped[key]
        row = []
        for i, name in enumerate(header):
            if i == rep_i:
                continue
            if i in numeric:
                vals = [g[i] for g in group if g[i] is not None]
                row.append(float(np.mean(vals)) if vals else None)
            else:
                row.append(group[0][i])
        out_rows.append(row)
    return out_header, out_rows


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Execute one configured experiment; emit results, summary, and manifest."""
    config.validate()
    t_start = time.perf_counter()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = None
    if config.kind != "TIMING":
        if config.kind == "RHO_ADVISOR" and not config.dataset:
            dataset = None
        else:
            dataset = _resolve_dataset(config)

    kind = config.kind
    if kind in ("BIA_DISPARITY", "FOLH_BIA"):
        rhos: list[float | None] = [None] if kind == "BIA_DISPARITY" else list(config.rhos)
        points = [(eps, rho) for eps in config.epsilons for rho in rhos]
        header, rows, infeasible = _bia_rows(config, dataset, points)
    elif kind in ("MGA_DISPARITY", "FOLH_MGA"):
        if kind == "MGA_DISPARITY":
            points = [(eps, None) for eps in config.epsilons]
            groups: Sequence[str] = GROUP_NAMES
        else:
            points = [(eps, rho) for eps in config.epsilons for rho in [None] + list(config.rhos)]
            groups = (config.attacker_group,)
        header, rows, infeasible = _mga_rows(config, dataset, points, groups)
    elif kind == "TIMING":
        header, rows, infeasible = _timing_rows(config)
    elif kind == "DISTORTION":
        header, rows, infeasible = _distortion_rows(config, dataset)
    elif kind == "RHO_ADVISOR":
        header, rows, infeasible = _advisor_rows(config, dataset)
    else:  # pragma: no cover - validate() guards this
        raise ConfigError(f"unhandled kind {kind}")

    if not rows:
        raise InfeasibleSweep(
            "every sweep point was infeasible: " + "; ".join(infeasible)
        )

    results_path = out_dir / "results.csv"
    summary_path = out_dir / "summary.csv"
    manifest_path = out_dir / "manifest.json"
    _write_csv(results_path, header, rows)
    s_header, s_rows = _summarize(header, rows)
    _write_csv(summary_path, s_header, s_rows)

    manifest = {
        "config": asdict(config),
        "version": __version__,
        "derived_g": {repr(e): (config.g_override or derive_g(e)) for e in config.epsilons},
        "dataset_summary": (
            {"n_users": dataset.n_users, "domain_size": dataset.domain_size}
            if dataset is not None
            else None
        ),
        "repetitions": list(range(config.repetitions)),
        "repetition_stream_roots": [
            stream_seed(config.master_seed, rep, 0, 0) for rep in range(config.repetitions)
        ],
        "infeasible_points": infeasible,
        "wall_seconds": time.perf_counter() - t_start,
    }
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)

    return RunResult(
        results_path=results_path,
        summary_path=summary_path,
        manifest_path=manifest_path,
        header=header,
        rows=rows,
        summary_rows=s_rows,
        manifest=manifest,
    )


def run_timing(config: ExperimentConfig) -> RunResult:
    """TIMING-kind convenience wrapper."""
    if config.kind != "TIMING":
        raise ConfigError("run_timing requires kind=TIMING")
    return run_experiment(config)


def run_distortion(config: ExperimentConfig) -> RunResult:
    """DISTORTION-kind convenience wrapper."""
    if config.kind != "DISTORTION":
        raise ConfigError("run_distortion requires kind=DISTORTION")
    return run_experiment(config)


def summary_value(
    result: RunResult,
    filters: dict[str, Any],
    column: str,
) -> float:
    """Look up one averaged cell from a run summary (test/CLI helper)."""
    header, rows = _summarize(result.header, result.rows)
    col = header.index(column)
    matches = []
    for row in rows:
        ok = True
        for name, want in filters.items():
            cell = row[header.index(name)]
            if isinstance(want, float):
                ok = ok and cell is not None and math.isclose(float(cell), want, rel_tol=1e-12)
            else:
                ok = ok and cell == want
        if ok:
            matches.append(row[col])
    if len(matches) != 1:
        raise KeyError(f"filters {filters} matched {len(matches)} rows")
    return float(matches[0])
