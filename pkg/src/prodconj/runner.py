"""Executes a loaded scenario's checks and assembles the report.

Checks are independent, so a worker pool may run them concurrently; each
worker then gets its own evaluation context over the same sample plan,
which keeps results identical to the serial path (the context is a pure
cache).  Rows are sorted by id during rendering, so parallelism never
changes output bytes.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

from .checks import judge, error_row
from .errors import EvaluationError, ConfigError
from .reporting import Report
from .scenario import CheckSpec, Scenario, load_scenario, make_context


def _run_one(ctx, spec: CheckSpec, default_tol: float):
    start = time.perf_counter()
    tol = spec.tol if spec.tol is not None else default_tol
    try:
        raw = spec.kind.runner(ctx, spec.params, tol)
        rows = judge(spec.name, spec.kind, raw, spec.params,
                     tol, spec.floor, spec.expect)
    except (EvaluationError, ConfigError, FloatingPointError) as exc:
        rows = [error_row(spec.name, spec.kind, exc)]
    elapsed = time.perf_counter() - start
    for row in rows:
        row.seconds = elapsed
    return rows


def run_scenario(scenario: Scenario, seed: int | None = None,
                 samples: int | None = None, tol: float | None = None,
                 filter_substr: str | None = None, jobs: int = 1) -> Report:
    """Run the checks and return the report.

    `tol` replaces the scenario-wide default; a check's own explicit
    tolerance still wins, since those mark deliberate strictness choices.
    `filter_substr` matches against check names and kind names.
    """
    default_tol = scenario.tol if tol is None else tol
    specs = scenario.checks
    if filter_substr:
        specs = [s for s in specs
                 if filter_substr in s.name or filter_substr in s.kind.name]
    plan_seed = scenario.plan.seed if seed is None else seed
    plan_count = scenario.plan.count if samples is None else samples
    report = Report(scenario.name, plan_seed, plan_count)
    if not specs:
        return report
    if jobs <= 1:
        ctx = make_context(scenario, seed=seed, count=samples)
        for spec in specs:
            report.rows.extend(_run_one(ctx, spec, default_tol))
    else:
        def work(spec: CheckSpec):
            ctx = make_context(scenario, seed=seed, count=samples)
            return _run_one(ctx, spec, default_tol)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for rows in pool.map(work, specs):
                report.rows.extend(rows)
    return report


# ---- shipped corpus ---------------------------------------------------


def corpus_names() -> list[str]:
    root = resources.files("prodconj").joinpath("scenarios")
    names = [entry.name[:-4] for entry in root.iterdir()
             if entry.name.endswith(".scn")]
    return sorted(names)


def corpus_text(name: str) -> str:
    path = resources.files("prodconj").joinpath("scenarios", f"{name}.scn")
    if not path.is_file():
        known = ", ".join(corpus_names())
        raise ConfigError(f"no shipped scenario {name!r}; shipped: {known}")
    return path.read_text(encoding="utf-8")


def load_shipped(name: str) -> Scenario:
    return load_scenario(corpus_text(name), name=name)
