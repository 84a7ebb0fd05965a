"""Experiment runner: config parsing, multi-run orchestration, result
persistence and the statistical comparison report.

Configs and per-run records share one plain-text dialect: ``[section]``
headers with ``key = value`` lines and ``#`` comments. Everything the harness
writes is greppable, diffable and deterministic; record writes go through a
temp file plus rename so interrupted experiments leave only valid files.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .algorithm import RunConfig, RunRecord
from .algorithm import run as run_algorithm
from .metrics import ComparisonVerdict, wilcoxon_rank_sum
from .problems import get_problem

DEFAULT_RUNS = 30
OUTPUT_ROOT_ENV = "DECOEVO_RESULTS"

# orientation per metric: True when larger values are better
METRIC_ORIENTATION = {"igd": False, "hv": True, "feasible_ratio": True}

_INT_KEYS = {"population", "budget", "reference_points"}
_FLOAT_KEYS = {"f", "cr", "p_m", "eta_m", "epsilon"}
_BOOL_KEYS = {"force_inherit", "reversed_archive_norm", "archive_from_parents"}
_CELL_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS
_EXPERIMENT_KEYS = {"name", "runs", "base_seed", "output_dir", "workers"}
# these must be stated explicitly in every config, in [defaults] or per cell
_REQUIRED_CELL_KEYS = ("budget", "cr", "f")


class ConfigError(ValueError):
    """Malformed experiment configuration; the message carries line context."""


class IncompleteCellError(RuntimeError):
    """A comparison was requested over a cell that is not complete."""


@dataclass
class ExperimentConfig:
    """One experiment: a list of per-problem cells plus run bookkeeping."""

    name: str
    runs: int
    base_seed: int
    output_dir: Path
    workers: int
    cells: list[tuple[str, dict]]  # (problem, RunConfig kwargs without seed)


@dataclass
class ExperimentResult:
    records: list[RunRecord]
    failures: list[tuple[str, int, str]]  # (problem, seed, error)
    cell_dirs: list[Path]

    @property
    def complete(self) -> bool:
        return not self.failures


@dataclass
class ComparisonRow:
    problem: str
    stat_a: str
    stat_b: str
    symbol: Optional[str]  # None when the metric is unavailable
    verdict: Optional[ComparisonVerdict]


@dataclass
class ComparisonReport:
    metric: str
    label_a: str
    label_b: str
    rows: list[ComparisonRow]

    def tally(self) -> tuple[int, int, int]:
        symbols = [row.symbol for row in self.rows if row.symbol is not None]
        return (symbols.count("+"), symbols.count("-"), symbols.count("="))

    def render(self) -> str:
        width = max([len("problem")] + [len(r.problem) for r in self.rows]) + 2
        stat_w = max([len(self.label_a), len(self.label_b), 22]
                     + [len(r.stat_a) for r in self.rows]
                     + [len(r.stat_b) for r in self.rows]) + 2
        lines = [f"metric: {self.metric}",
                 f"{'problem':<{width}}{self.label_a:<{stat_w}}{self.label_b:<{stat_w}}verdict"]
        for row in self.rows:
            symbol = row.symbol if row.symbol is not None else "unavailable"
            lines.append(f"{row.problem:<{width}}{row.stat_a:<{stat_w}}"
                         f"{row.stat_b:<{stat_w}}{symbol}")
        plus, minus, equal = self.tally()
        lines.append(f"+/-/= : {plus}/{minus}/{equal}")
        return "\n".join(lines)


def _parse_kv_text(text: str, source: str) -> list[tuple[str, dict, int]]:
    """Parse the key-value dialect into (section, {key: (value, line)}, line)."""
    sections: list[tuple[str, dict, int]] = []
    current: Optional[dict] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"{source}:{lineno}: empty section name")
            sections.append((name, {}, lineno))
            current = sections[-1][1]
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key before any [section] header")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in current:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        current[key] = (value, lineno)
    return sections


def _convert(key: str, value: str, source: str, lineno: int):
    try:
        if key in _INT_KEYS or key in {"runs", "base_seed", "workers"}:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            lowered = value.lower()
            if lowered in {"true", "yes", "1"}:
                return True
            if lowered in {"false", "no", "0"}:
                return False
            raise ValueError(f"not a boolean: {value!r}")
    except ValueError as exc:
        raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    return value


def parse_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config file.

    Unknown sections or keys are rejected with their line number; the
    operator parameters ``cr``, ``f`` and the ``budget`` must be stated
    explicitly (in [defaults] or per problem cell) rather than inherited
    from library defaults.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    source = str(path)
    sections = _parse_kv_text(path.read_text(), source)

    experiment: dict = {}
    defaults: dict = {}
    cells: list[tuple[str, dict, int]] = []
    seen_sections = set()
    seen_problems = set()
    for name, items, lineno in sections:
        if name == "experiment" or name == "defaults":
            if name in seen_sections:
                raise ConfigError(f"{source}:{lineno}: duplicate [{name}] section")
            seen_sections.add(name)
            allowed = _EXPERIMENT_KEYS if name == "experiment" else _CELL_KEYS
            target = experiment if name == "experiment" else defaults
            for key, (value, key_line) in items.items():
                if key not in allowed:
                    raise ConfigError(f"{source}:{key_line}: unknown key {key!r} in [{name}]")
                target[key] = _convert(key, value, source, key_line)
        elif name.startswith("problem:"):
            problem = name.split(":", 1)[1].strip()
            if not problem:
                raise ConfigError(f"{source}:{lineno}: missing problem name in section header")
            if problem in seen_problems:
                raise ConfigError(f"{source}:{lineno}: duplicate problem entry {problem!r}")
            seen_problems.add(problem)
            overrides = {}
            for key, (value, key_line) in items.items():
                if key not in _CELL_KEYS:
                    raise ConfigError(f"{source}:{key_line}: unknown key {key!r} in [{name}]")
                overrides[key] = _convert(key, value, source, key_line)
            cells.append((problem, overrides, lineno))
        else:
            raise ConfigError(f"{source}:{lineno}: unknown section [{name}]")

    if not cells:
        raise ConfigError(f"{source}: no [problem:<name>] sections found")

    runs = experiment.get("runs", DEFAULT_RUNS)
    if runs < 1:
        raise ConfigError(f"{source}: runs must be >= 1, got {runs}")
    workers = experiment.get("workers", 1)
    if workers < 1:
        raise ConfigError(f"{source}: workers must be >= 1, got {workers}")
    output_dir = Path(experiment.get(
        "output_dir", os.environ.get(OUTPUT_ROOT_ENV, "results")))
    name = experiment.get("name", path.stem)

    resolved_cells: list[tuple[str, dict]] = []
    for problem, overrides, lineno in cells:
        try:
            get_problem(problem)
        except KeyError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc.args[0]}") from None
        kwargs = dict(defaults)
        kwargs.update(overrides)
        for required in _REQUIRED_CELL_KEYS:
            if required not in kwargs:
                raise ConfigError(
                    f"{source}:{lineno}: {required!r} must be stated explicitly for "
                    f"problem {problem!r} (in [defaults] or in its own section)")
        kwargs["problem"] = problem
        try:
            RunConfig(seed=0, **kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}:{lineno}: invalid cell {problem!r}: {exc}") from None
        resolved_cells.append((problem, kwargs))

    return ExperimentConfig(name=name, runs=runs,
                            base_seed=experiment.get("base_seed", 0),
                            output_dir=output_dir, workers=workers,
                            cells=resolved_cells)


def _fmt_value(value) -> str:
    if value is None:
        return "unavailable"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.17g}"
    return str(value)


def _parse_metric(text: str) -> Optional[float]:
    if text == "unavailable":
        return None
    return float(text)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _vector_line(vector: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in vector)


def write_record(record: RunRecord, path) -> None:
    """Persist one run record atomically in the shared text dialect."""
    lines = [
        "[run]",
        f"problem = {record.problem}",
        f"config_digest = {record.config_digest}",
        f"seed = {record.seed}",
        f"fe_used = {record.fe_used}",
        f"wall_time_s = {_fmt_value(record.wall_time_s)}",
        f"n_obj = {record.front.shape[1]}",
        f"n_var = {record.decisions.shape[1]}",
        "[metrics]",
        f"igd = {_fmt_value(record.igd)}",
        f"hv = {_fmt_value(record.hv)}",
        f"feasible_ratio = {_fmt_value(record.feasible_ratio)}",
        f"n_feasible = {record.n_feasible}",
        f"n_front = {len(record.front)}",
        "[front]",
    ]
    lines += [f"p{i} = {_vector_line(row)}" for i, row in enumerate(record.front)]
    lines.append("[decisions]")
    lines += [f"x{i} = {_vector_line(row)}" for i, row in enumerate(record.decisions)]
    _atomic_write(Path(path), "\n".join(lines) + "\n")


def read_record(path) -> RunRecord:
    """Parse a record file written by write_record."""
    path = Path(path)
    sections = {name: items for name, items, _ in _parse_kv_text(path.read_text(), str(path))}
    run_info = {k: v for k, (v, _) in sections["run"].items()}
    metric_info = {k: v for k, (v, _) in sections["metrics"].items()}
    n_obj = int(run_info["n_obj"])
    n_var = int(run_info["n_var"])
    front_items = sections.get("front", {})
    decision_items = sections.get("decisions", {})
    front = (np.array([[float(v) for v in value.split()]
                       for value, _ in front_items.values()])
             if front_items else np.empty((0, n_obj)))
    decisions = (np.array([[float(v) for v in value.split()]
                           for value, _ in decision_items.values()])
                 if decision_items else np.empty((0, n_var)))
    return RunRecord(
        problem=run_info["problem"],
        config_digest=run_info["config_digest"],
        seed=int(run_info["seed"]),
        fe_used=int(run_info["fe_used"]),
        wall_time_s=float(run_info["wall_time_s"]),
        igd=_parse_metric(metric_info["igd"]),
        hv=_parse_metric(metric_info["hv"]),
        feasible_ratio=float(metric_info["feasible_ratio"]),
        n_feasible=int(metric_info["n_feasible"]),
        front=front, decisions=decisions)


def _record_paths(cell_dir: Path) -> list[Path]:
    paths = list(Path(cell_dir).glob("run_*.record"))
    return sorted(paths, key=lambda p: int(p.stem.split("_")[1]))


def _metric_values(records: Sequence[RunRecord], metric: str) -> list[Optional[float]]:
    return [getattr(record, metric) for record in records]


def aggregate_cell(cell_dir, expected_runs: int) -> Path:
    """Recompute the cell aggregate from its record files and write it.

    Reading the records back guarantees the aggregate always matches what an
    independent recomputation from the files would produce.
    """
    cell_dir = Path(cell_dir)
    records = [read_record(p) for p in _record_paths(cell_dir)]
    if not records:
        raise RuntimeError(f"no records found in {cell_dir}")
    complete = len(records) == expected_runs
    lines = [
        "[cell]",
        f"problem = {records[0].problem}",
        f"config_digest = {records[0].config_digest}",
        f"runs_expected = {expected_runs}",
        f"runs_completed = {len(records)}",
        f"complete = {'true' if complete else 'false'}",
    ]
    for metric in ("igd", "hv", "feasible_ratio"):
        values = _metric_values(records, metric)
        lines.append(f"[{metric}]")
        if any(v is None for v in values):
            lines.append("available = false")
            continue
        array = np.array([float(v) for v in values])
        finite = array[~np.isnan(array)]
        nan_count = int(np.isnan(array).sum())
        if finite.size == 0:
            mean = std = math.nan
        else:
            mean = float(finite.mean())
            std = float(finite.std(ddof=1)) if finite.size > 1 else 0.0
        lines += [f"mean = {_fmt_value(mean)}",
                  f"std = {_fmt_value(std)}",
                  f"nan_count = {nan_count}",
                  f"n_values = {int(finite.size)}"]
    out = cell_dir / "aggregate.txt"
    _atomic_write(out, "\n".join(lines) + "\n")
    return out


def _echo_config(config: ExperimentConfig) -> str:
    lines = [
        "[experiment]",
        f"name = {config.name}",
        f"runs = {config.runs}",
        f"base_seed = {config.base_seed}",
        f"output_dir = {config.output_dir}",
        f"workers = {config.workers}",
    ]
    for problem, kwargs in config.cells:
        resolved = RunConfig(seed=0, **kwargs)
        lines.append(f"[problem:{problem}]")
        for field in fields(RunConfig):
            if field.name in {"seed", "problem"}:
                continue
            lines.append(f"{field.name} = {_fmt_value(getattr(resolved, field.name))}")
    return "\n".join(lines) + "\n"


def _execute_run(task: tuple[dict, str, int]) -> tuple[str, int, Optional[str]]:
    kwargs, cell_dir, seed = task
    try:
        record = run_algorithm(RunConfig(seed=seed, **kwargs))
        write_record(record, Path(cell_dir) / f"run_{seed}.record")
        return (cell_dir, seed, None)
    except Exception as exc:  # record the failure, skip the run
        _atomic_write(Path(cell_dir) / f"run_{seed}.error",
                      f"[error]\nseed = {seed}\nmessage = {exc!r}\n")
        return (cell_dir, seed, repr(exc))


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every cell of the experiment and persist records and aggregates.

    Seeds are base_seed .. base_seed + runs - 1 per cell. Runs may execute in
    parallel worker processes; record content depends only on (config, seed),
    so the worker count never changes any numeric output.
    """
    output = Path(config.output_dir)
    output.mkdir(parents=True, exist_ok=True)
    _atomic_write(output / "config_resolved.txt", _echo_config(config))

    tasks = []
    cell_dirs = []
    for problem, kwargs in config.cells:
        cell_dir = output / problem
        cell_dir.mkdir(parents=True, exist_ok=True)
        cell_dirs.append(cell_dir)
        for i in range(config.runs):
            tasks.append((kwargs, str(cell_dir), config.base_seed + i))

    if config.workers == 1:
        outcomes = [_execute_run(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_execute_run, tasks))

    failures = []
    for (kwargs, cell_dir, seed), (_, _, error) in zip(tasks, outcomes):
        if error is not None:
            failures.append((kwargs["problem"], seed, error))

    records = []
    for cell_dir in cell_dirs:
        aggregate_cell(cell_dir, config.runs)
        records.extend(read_record(p) for p in _record_paths(cell_dir))
    return ExperimentResult(records=records, failures=failures, cell_dirs=cell_dirs)


def _discover_cells(root: Path) -> dict[str, Path]:
    """Map problem name to cell directory under an experiment root.

    A directory containing record files directly is a single cell; otherwise
    every immediate subdirectory with records is one cell.
    """
    root = Path(root)
    if _record_paths(root):
        return {read_record(_record_paths(root)[0]).problem: root}
    found = {}
    for child in sorted(p for p in root.iterdir() if p.is_dir()):
        paths = _record_paths(child)
        if paths:
            found[read_record(paths[0]).problem] = child
    if not found:
        raise FileNotFoundError(f"no run records found under {root}")
    return found


def _check_complete(cell_dir: Path) -> None:
    aggregate = Path(cell_dir) / "aggregate.txt"
    if not aggregate.exists():
        raise IncompleteCellError(f"{cell_dir}: missing aggregate.txt")
    sections = {name: items for name, items, _ in
                _parse_kv_text(aggregate.read_text(), str(aggregate))}
    complete = sections.get("cell", {}).get("complete", ("false", 0))[0]
    if complete != "true":
        raise IncompleteCellError(f"{cell_dir}: cell is marked incomplete")


def _stat_string(values: Sequence[Optional[float]]) -> str:
    array = np.array([float(v) for v in values])
    finite = array[~np.isnan(array)]
    if finite.size == 0:
        return "NaN (NaN)"
    mean = finite.mean()
    std = finite.std(ddof=1) if finite.size > 1 else 0.0
    return f"{mean:.4e} ({std:.2e})"


def compare(path_a, path_b, metric: str = "igd",
            larger_is_better: Optional[bool] = None) -> ComparisonReport:
    """Statistically compare two experiment outputs problem by problem.

    Each path is either a single cell directory or an experiment root; rows
    are emitted for every problem present on both sides, and cells must be
    complete. "+" means the first path performed significantly better.
    """
    if metric not in METRIC_ORIENTATION:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRIC_ORIENTATION)}")
    if larger_is_better is None:
        larger_is_better = METRIC_ORIENTATION[metric]
    cells_a = _discover_cells(Path(path_a))
    cells_b = _discover_cells(Path(path_b))
    shared = sorted(set(cells_a) & set(cells_b))
    if not shared:
        raise ValueError(f"no common problems between {path_a} and {path_b}")
    rows = []
    for problem in shared:
        _check_complete(cells_a[problem])
        _check_complete(cells_b[problem])
        records_a = [read_record(p) for p in _record_paths(cells_a[problem])]
        records_b = [read_record(p) for p in _record_paths(cells_b[problem])]
        values_a = _metric_values(records_a, metric)
        values_b = _metric_values(records_b, metric)
        if any(v is None for v in values_a + values_b):
            rows.append(ComparisonRow(problem, "unavailable", "unavailable", None, None))
            continue
        verdict = wilcoxon_rank_sum(values_a, values_b, larger_is_better)
        rows.append(ComparisonRow(problem, _stat_string(values_a),
                                  _stat_string(values_b), verdict.symbol, verdict))
    return ComparisonReport(metric=metric, label_a=str(path_a), label_b=str(path_b),
                            rows=rows)


def export_front(record_path, out_path) -> Path:
    """Write a record's final front as a CSV with one header line f1..fm."""
    record = read_record(record_path)
    n_obj = record.front.shape[1]
    lines = [",".join(f"f{i + 1}" for i in range(n_obj))]
    lines += [",".join(f"{v:.17g}" for v in row) for row in record.front]
    out = Path(out_path)
    _atomic_write(out, "\n".join(lines) + "\n")
    return out
