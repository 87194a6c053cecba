"""Selection quality metrics.

Given the solver chosen for each instance and the recorded runtimes:

- avg_runtime: mean runtime of the chosen solvers
- solved_pct: percentage of instances whose chosen run finished below the cutoff
  and is not flagged as a timeout or crash
- accuracy: fraction of instances where the chosen solver achieves the best time
  and solves the instance; a tie among censored runs is not a correct choice
- cost_of_wrong: mean extra time over the best solver, on wrong choices only
- quartiles: average runtime per quartile of the best runtime, with boundaries at
  the 25th, 50th and 75th percentiles of the evaluated instances

Sums are exactly rounded, so reports do not depend on record order.
"""

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from rich.table import Table

from satfolio.training.dataset import RuntimeRecord
from satfolio.util.csv import read_csv, write_csv

DEFAULT_CUTOFF = 500.0
N_QUARTILES = 4


class MissingSelection(ValueError):
    pass


@dataclass
class EvaluationReport:
    n_instances: int
    cutoff: float
    avg_runtime: float
    solved_pct: float
    accuracy: float
    cost_of_wrong: float
    no_mispredictions: bool  # cost_of_wrong is 0 because no choice was wrong
    oracle_avg_runtime: float
    quartile_avg_runtime: list[float | None] = field(default_factory=list)
    quartile_oracle_runtime: list[float | None] = field(default_factory=list)
    quartile_counts: list[int] = field(default_factory=list)


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values) if values else 0.0


def _resolve(
    selections: Mapping[str, int] | Sequence[int], records: Sequence[RuntimeRecord]
) -> np.ndarray:
    if isinstance(selections, Mapping):
        missing = [r.instance_id for r in records if r.instance_id not in selections]
        if missing:
            raise MissingSelection(
                f"No selection for {len(missing)} instance(s), e.g. `{missing[0]}`"
            )
        chosen = [selections[r.instance_id] for r in records]
    else:
        if len(selections) != len(records):
            raise MissingSelection(
                f"{len(selections)} selections for {len(records)} instances"
            )
        chosen = list(selections)

    chosen = np.asarray(chosen, dtype=np.int64)
    for record, k in zip(records, chosen):
        if not 0 <= k < record.n_solvers:
            raise ValueError(f"Invalid solver {k} selected for `{record.instance_id}`")
    return chosen


def _selected_times(chosen: np.ndarray, records: Sequence[RuntimeRecord]) -> np.ndarray:
    return np.array([r.runtimes[k] for r, k in zip(records, chosen)], dtype=np.float64)


def quartile_of(best_times: np.ndarray) -> np.ndarray:
    """Quartile index (0-3) of every best runtime; boundary values fall in the
    lower quartile"""
    bounds = np.percentile(best_times, [25, 50, 75])
    return np.searchsorted(bounds, best_times, side="left")


def evaluate(
    selections: Mapping[str, int] | Sequence[int],
    records: Sequence[RuntimeRecord],
    cutoff: float = DEFAULT_CUTOFF,
    statuses: Mapping[tuple[str, int], str] | None = None,
) -> EvaluationReport:
    """`selections` maps instance ids to solver indices, or lists one index per
    record in record order. `statuses` flags runs by `(instance_id, solver)`;
    any status other than `ok` marks the run unsolved"""
    if cutoff <= 0:
        raise ValueError(f"Cutoff must be positive, got {cutoff}")
    if len(records) == 0:
        raise MissingSelection("Nothing to evaluate")

    chosen = _resolve(selections, records)
    t_selected = _selected_times(chosen, records)
    t_star = np.array([r.best_time for r in records])
    statuses = statuses or {}
    flagged = np.array(
        [statuses.get((r.instance_id, int(k)), "ok") != "ok" for r, k in zip(records, chosen)],
        dtype=bool,
    )
    solved = (t_selected < cutoff) & ~flagged
    correct = (t_selected == t_star) & solved
    gaps = t_selected - t_star
    wrong_costs = gaps[gaps > 0]

    quartiles = quartile_of(t_star)
    quartile_avg, quartile_oracle, quartile_counts = [], [], []
    for q in range(N_QUARTILES):
        in_q = quartiles == q
        quartile_counts.append(int(in_q.sum()))
        quartile_avg.append(_mean(t_selected[in_q]) if in_q.any() else None)
        quartile_oracle.append(_mean(t_star[in_q]) if in_q.any() else None)

    return EvaluationReport(
        n_instances=len(records),
        cutoff=float(cutoff),
        avg_runtime=_mean(t_selected),
        solved_pct=100.0 * float(np.mean(solved)),
        accuracy=float(np.mean(correct)),
        cost_of_wrong=_mean(wrong_costs),
        no_mispredictions=len(wrong_costs) == 0,
        oracle_avg_runtime=_mean(t_star),
        quartile_avg_runtime=quartile_avg,
        quartile_oracle_runtime=quartile_oracle,
        quartile_counts=quartile_counts,
    )


def cost_of_wrong_distribution(
    selections: Mapping[str, int] | Sequence[int], records: Sequence[RuntimeRecord]
) -> np.ndarray:
    """Extra time over the best solver of every wrong choice, in record order"""
    chosen = _resolve(selections, records)
    gaps = _selected_times(chosen, records) - np.array([r.best_time for r in records])
    return gaps[gaps > 0]


def oracle_selections(records: Sequence[RuntimeRecord]) -> dict[str, int]:
    return {r.instance_id: r.best_solver for r in records}


def _report_items(report: EvaluationReport) -> list[tuple[str, object]]:
    items = []
    for key, value in asdict(report).items():
        if isinstance(value, list):
            items += [(f"{key}_q{q + 1}", v) for q, v in enumerate(value)]
        else:
            items.append((key, value))
    return items


def report_rows(report: EvaluationReport) -> list[dict]:
    """Flattens a report into `metric,value` rows; empty quartiles are blank"""
    return [
        {"metric": key, "value": "" if value is None else value}
        for key, value in _report_items(report)
    ]


def write_report(report: EvaluationReport, path: Path | str):
    write_csv(report_rows(report), path, ["metric", "value"])


def format_report(reports: Mapping[str, EvaluationReport], title: str | None = None) -> Table:
    """One column per selector"""
    table = Table(title=title)
    table.add_column("metric")
    for name in reports:
        table.add_column(name, justify="right")

    def _fmt(value) -> str:
        if value is None:
            return "-"
        if isinstance(value, bool):
            return "yes" if value else "no"
        if isinstance(value, float):
            return f"{value:.3f}"
        return str(value)

    columns = [_report_items(r) for r in reports.values()]
    for i, (metric, _) in enumerate(columns[0] if columns else []):
        table.add_row(metric, *(_fmt(c[i][1]) for c in columns))
    return table


def write_selections(
    selections: Mapping[str, int], records: Sequence[RuntimeRecord], path: Path | str
):
    chosen = _resolve(selections, records)
    rows = [
        {
            "instance_id": r.instance_id,
            "selected": int(k),
            "t_selected": repr(float(r.runtimes[k])),
            "t_star": repr(r.best_time),
        }
        for r, k in zip(records, chosen)
    ]
    write_csv(rows, path, ["instance_id", "selected", "t_selected", "t_star"])


def read_selections(path: Path | str) -> dict[str, int]:
    header, rows = read_csv(path)
    if "instance_id" not in header or "selected" not in header:
        raise ValueError(f"Selections file `{path}` lacks instance_id/selected columns")
    try:
        return {row["instance_id"]: int(row["selected"]) for row in rows}
    except ValueError as e:
        raise ValueError(f"Invalid selection in `{path}`: {e}") from None
