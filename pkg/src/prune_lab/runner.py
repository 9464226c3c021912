"""Config validation, cell dispatch and CSV/sidecar output."""
from __future__ import annotations

import csv
import io
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig, config_hash, format_value
from .errors import ConfigError
from .experiments import EXPERIMENTS, coerce, run_cell

JOBS_ENV = "PRUNE_LAB_JOBS"
ID_COLUMNS = ("config_hash", "seed", "cell")


@dataclass
class Validation:
    experiment: str | None
    params: dict = field(default_factory=dict)
    problems: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)
    cells: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


@dataclass
class ResultTable:
    columns: tuple
    rows: list
    metadata: dict


def validate(config: ExperimentConfig) -> Validation:
    """Schema and range checks without running anything."""
    exp = EXPERIMENTS.get(config.experiment)
    where = f"{config.source}:{config.lines.get('experiment', '?')}"
    if exp is None:
        known = ", ".join(sorted(EXPERIMENTS))
        return Validation(config.experiment, problems=[f"{where}: unknown experiment {config.experiment!r} (known: {known})"])
    out = Validation(exp.name)
    params = exp.defaults()
    type_errors = False
    for key, value in config.params.items():
        line = f"{config.source}:{config.lines.get(key, '?')}"
        spec = exp.param(key)
        if spec is None:
            out.problems.append(f"{line}: unknown key {key!r} for experiment {exp.name}")
            continue
        try:
            params[key] = coerce(spec, value)
        except ValueError as exc:
            out.problems.append(f"{line}: key {key!r}: {exc}")
            type_errors = True
    out.params = params
    if type_errors:
        return out
    for msg in exp.check(params):
        key = msg.split()[0]
        line = config.lines.get(key)
        out.problems.append(f"{config.source}:{line}: {msg}" if line else msg)
    if out.problems:
        return out
    out.derived = exp.derived(params)
    out.cells = exp.cells(params)
    return out


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        env = os.environ.get(JOBS_ENV, "").strip()
        if env:
            try:
                jobs = int(env)
            except ValueError:
                raise ConfigError([f"{JOBS_ENV}={env!r} is not an integer"]) from None
        else:
            jobs = 1
    if jobs < 1:
        raise ConfigError(["--jobs must be at least 1"])
    return jobs


def run(config: ExperimentConfig, jobs: int | None = None) -> ResultTable:
    """Run every cell and collect rows ordered by cell index."""
    check = validate(config)
    if not check.ok:
        raise ConfigError(check.problems)
    jobs = resolve_jobs(jobs)
    exp = EXPERIMENTS[check.experiment]
    params = check.params
    digest = config_hash(exp.name, params, config.seed)
    start = time.perf_counter()
    args = [(exp.name, params, cell, config.seed) for cell in check.cells]
    if jobs == 1 or len(args) == 1:
        results = [run_cell(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
            results = list(pool.map(run_cell, *zip(*args)))
    rows = []
    for index, cell_rows in enumerate(results):
        for row in cell_rows:
            missing = [c for c in exp.columns if c not in row]
            if missing:
                raise KeyError(f"cell {index} did not produce columns {missing}")
            rows.append([digest, config.seed, index] + [row[c] for c in exp.columns])
    metadata = {
        "experiment": exp.name,
        "config_hash": digest,
        "seed": config.seed,
        "source": config.source,
        "cells": len(args),
        "rows": len(rows),
        "jobs": jobs,
        "wall_time_s": f"{time.perf_counter() - start:.3f}",
        "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "prune_lab_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "python_version": platform.python_version(),
    }
    for key in sorted(params):
        metadata[f"param.{key}"] = format_value(params[key])
    for key, value in check.derived.items():
        metadata[f"derived.{key}"] = format_value(value)
    for i, note in enumerate(exp.notes):
        metadata[f"note.{i}"] = note
    return ResultTable(ID_COLUMNS + tuple(exp.columns), rows, metadata)


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def render_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def render_meta(table: ResultTable) -> str:
    return "".join(f"{k}: {v}\n" for k, v in table.metadata.items())


def write_outputs(table: ResultTable, output_dir) -> tuple[Path, Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = table.metadata["experiment"]
    csv_path = out / f"{name}.csv"
    meta_path = out / f"{name}.meta.txt"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(table))
    with open(meta_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_meta(table))
    return csv_path, meta_path


def describe_validation(check: Validation, config: ExperimentConfig) -> str:
    lines = [f"experiment: {check.experiment}", f"seed: {config.seed}", f"output_dir: {config.output_dir}"]
    for key in sorted(check.params):
        lines.append(f"param {key} = {format_value(check.params[key])}")
    for key, value in check.derived.items():
        lines.append(f"derived {key} = {format_value(value)}")
    if check.ok:
        lines.append(f"cells: {len(check.cells)}")
        for i, cell in enumerate(check.cells):
            desc = ", ".join(f"{k}={format_value(v)}" for k, v in cell.items()) or "(single cell)"
            lines.append(f"  cell {i}: {desc}")
    for problem in check.problems:
        lines.append(f"problem: {problem}")
    lines.append("status: ok" if check.ok else f"status: {len(check.problems)} problem(s)")
    return "\n".join(lines)

