"""Monte-Carlo experiment execution, CSV persistence, summary statistics.

One result row per (framework, element count, power budget, realization).
Row seeds are derived from the base seed with a stable hash, so results are
identical no matter how work is scheduled; rows are sorted before writing.
The CSV is byte-reproducible for a given configuration: the wall-clock
column is written as 0 unless measured timing is explicitly requested,
since measured times cannot be reproducible (timings stay available on the
in-memory rows either way).
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelSet, sample_scenario, square_grid, synth_channels
from .config import (
    FRAMEWORK_DRIS,
    ExperimentConfig,
    system_architecture,
)
from .optimizer import DegenerateInstanceError, Solution, alternate
from .surface import Architecture

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "framework",
    "arch",
    "mode",
    "K",
    "L",
    "pt_dbm",
    "seed",
    "se_bps_hz",
    "outer_iters",
    "stalled",
    "wall_ms",
)

# Normal-approximation 95% confidence half-width multiplier.
_Z95 = 1.959963984540054


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class ResultRow:
    framework: str
    arch: str
    mode: str
    num_elements: int
    num_groups: int
    pt_dbm: float
    seed: int
    se_bps_hz: float
    outer_iters: int
    stalled: bool
    wall_ms: float
    error: str = ""  # degenerate-instance marker; in-memory only, not a CSV column


@dataclass(frozen=True)
class ResultsTable:
    rows: tuple[ResultRow, ...]
    solutions: dict | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class SummaryRow:
    framework: str
    num_elements: int
    pt_dbm: float
    count: int
    mean_se: float
    std_se: float
    ci_lo: float
    ci_hi: float


def derive_row_seed(
    base_seed: int, framework: str, num_elements: int, pt_dbm: float, realization: int
) -> int:
    """Stable per-row seed; order-independent reproducibility across workers."""
    key = f"{base_seed}|{framework}|{num_elements}|{pt_dbm!r}|{realization}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def _stream_seed(row_seed: int, role: str) -> int:
    key = f"{row_seed}|{role}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def realize_channels(cfg: ExperimentConfig, num_elements: int, row_seed: int) -> ChannelSet:
    """Scenario + fading draw for one row (both are redrawn per realization)."""
    scenario_cfg = replace(
        cfg.scenario,
        array=square_grid(num_elements, cfg.scenario.array.spacing_wavelengths),
    )
    scenario = sample_scenario(scenario_cfg, _stream_seed(row_seed, "scenario"))
    return synth_channels(scenario, scenario_cfg, _stream_seed(row_seed, "channel"))


def _framework_architecture(cfg: ExperimentConfig, framework: str) -> Architecture:
    if framework == FRAMEWORK_DRIS:
        return Architecture.single_connected()
    return system_architecture(cfg.system)


def _run_cell(args) -> tuple[tuple, ResultRow, Solution | None]:
    cfg, framework, num_elements, pt_dbm, realization = args
    row_seed = derive_row_seed(cfg.base_seed, framework, num_elements, pt_dbm, realization)
    channels = realize_channels(cfg, num_elements, row_seed)
    arch = _framework_architecture(cfg, framework)
    mode = cfg.system.mode

    start = time.perf_counter()
    solution = None
    error = ""
    try:
        solution = alternate(
            channels,
            arch,
            mode,
            dbm_to_mw(pt_dbm),
            cfg.optimizer,
            seed=_stream_seed(row_seed, "optimizer"),
        )
    except DegenerateInstanceError as exc:
        error = str(exc)
    wall_ms = (time.perf_counter() - start) * 1e3

    row = ResultRow(
        framework=framework,
        arch=arch.kind.value,
        mode=mode.value,
        num_elements=num_elements,
        num_groups=arch.num_groups(num_elements),
        pt_dbm=pt_dbm,
        seed=row_seed,
        se_bps_hz=solution.se if solution is not None else float("nan"),
        outer_iters=solution.outer_iterations if solution is not None else 0,
        stalled=solution.stalled if solution is not None else False,
        wall_ms=wall_ms,
        error=error,
    )
    return (framework, num_elements, pt_dbm, realization), row, solution


def run_experiment(
    cfg: ExperimentConfig, workers: int = 1, keep_solutions: bool = False
) -> ResultsTable:
    """Execute every (framework, K, P_t, realization) cell of the sweep.

    `workers` > 1 distributes rows over processes; seeds are derived per
    row and the output is sorted, so the table is identical regardless of
    worker count.  `keep_solutions` retains the full per-cell `Solution`
    objects (traces included) on the returned table.
    """
    cells = [
        (cfg, framework, num_elements, pt_dbm, realization)
        for framework in sorted(cfg.frameworks)
        for num_elements in cfg.system.elements
        for pt_dbm in cfg.pt_dbm
        for realization in range(cfg.realizations)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell, cells, chunksize=8))
    else:
        outcomes = [_run_cell(cell) for cell in cells]
    outcomes.sort(key=lambda item: item[0])
    rows = tuple(row for _, row, _ in outcomes)
    solutions = {key: sol for key, _, sol in outcomes} if keep_solutions else None
    return ResultsTable(rows=rows, solutions=solutions)


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def write_csv(table: ResultsTable, path, measured_timing: bool = False) -> None:
    """Write the documented CSV; deterministic bytes unless timing is kept."""
    with open(path, "w", newline="\n") as handle:
        handle.write(",".join(CSV_COLUMNS) + "\n")
        for row in table.rows:
            wall = row.wall_ms if measured_timing else 0.0
            handle.write(
                ",".join(
                    (
                        row.framework,
                        row.arch,
                        row.mode,
                        str(row.num_elements),
                        str(row.num_groups),
                        _fmt(row.pt_dbm),
                        str(row.seed),
                        _fmt(row.se_bps_hz),
                        str(row.outer_iters),
                        "1" if row.stalled else "0",
                        _fmt(wall),
                    )
                )
                + "\n"
            )


def read_csv(path) -> ResultsTable:
    with open(path) as handle:
        header = handle.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for line in handle:
            parts = line.strip().split(",")
            rows.append(
                ResultRow(
                    framework=parts[0],
                    arch=parts[1],
                    mode=parts[2],
                    num_elements=int(parts[3]),
                    num_groups=int(parts[4]),
                    pt_dbm=float(parts[5]),
                    seed=int(parts[6]),
                    se_bps_hz=float(parts[7]),
                    outer_iters=int(parts[8]),
                    stalled=parts[9] == "1",
                    wall_ms=float(parts[10]),
                )
            )
    return ResultsTable(rows=tuple(rows))


def summarize(table: ResultsTable) -> list[SummaryRow]:
    """Mean, sample std, and 95% CI of the SE per (framework, K, P_t) group.

    Rows that failed (degenerate instance, non-finite SE) are excluded with
    a warning; groups left empty are dropped entirely.  Single-row groups
    report their value with undefined (NaN) spread.
    """
    if not table.rows:
        raise ValueError("empty results table")
    groups: dict[tuple, list[float]] = {}
    for row in table.rows:
        key = (row.framework, row.num_elements, row.pt_dbm)
        groups.setdefault(key, [])
        if row.error or not math.isfinite(row.se_bps_hz):
            logger.warning("excluding failed row %s: %s", key, row.error or "non-finite SE")
            continue
        groups[key].append(row.se_bps_hz)

    summary = []
    for key in sorted(groups):
        values = np.asarray(groups[key])
        if values.size == 0:
            logger.warning("group %s has no usable rows; excluded from summary", key)
            continue
        mean = float(values.mean())
        if values.size > 1:
            std = float(values.std(ddof=1))
            half = _Z95 * std / math.sqrt(values.size)
            lo, hi = mean - half, mean + half
        else:
            std = lo = hi = float("nan")
        summary.append(
            SummaryRow(
                framework=key[0],
                num_elements=key[1],
                pt_dbm=key[2],
                count=int(values.size),
                mean_se=mean,
                std_se=std,
                ci_lo=lo,
                ci_hi=hi,
            )
        )
    return summary
