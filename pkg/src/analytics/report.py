"""
Metrics reports: GroLLA-style aggregation, JSON/CSV output and report comparison
"""

import csv
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

from pydantic import ValidationError

from src.errors import ConfigError, DependencyError
from src.models.schemas import MetricsReport

logger = logging.getLogger(__name__)

COMPARE_COLUMNS = ("metric", "report", "baseline", "value", "delta", "abs_delta")


def grolla(components: Dict[str, float], names: Sequence[str]) -> float:
    """
    Macro average of the configured component scores, each in [0, 1]

    Raises:
        ConfigError: no components configured, or one of them was not measured
    """
    if not names:
        raise ConfigError("GroLLA needs at least one component")
    missing = [name for name in names if name not in components]
    if missing:
        raise ConfigError(f"GroLLA components not measured: {', '.join(missing)}")
    return sum(components[name] for name in names) / len(names)


def write_report(report: MetricsReport, reports_dir: Union[str, Path]) -> Tuple[Path, Path]:
    """reports/<suite>.json plus a flat reports/<suite>.csv with one metric per row"""
    reports_dir = Path(reports_dir)
    reports_dir.mkdir(parents=True, exist_ok=True)
    json_path = reports_dir / f"{report.suite}.json"
    json_path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")

    csv_path = reports_dir / f"{report.suite}.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for name, value in report.flatten().items():
            writer.writerow([name, repr(value)])
    logger.info(f"Wrote report {json_path}")
    return json_path, csv_path


def load_report(path: Union[str, Path]) -> MetricsReport:
    path = Path(path)
    if not path.is_file():
        raise DependencyError(f"Report not found: {path}", missing=str(path))
    try:
        return MetricsReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigError(f"{path} is not a metrics report: {e}") from e


def compare_reports(paths: Sequence[Union[str, Path]]) -> List[Dict[str, object]]:
    """
    Per-metric deltas of every report against the first one

    Only metrics present in the baseline and the other report are compared.

    Raises:
        ConfigError: fewer than two reports, or a pair without shared metrics
    """
    if len(paths) < 2:
        raise ConfigError("compare needs at least two reports")
    baseline = load_report(paths[0]).flatten()
    rows: List[Dict[str, object]] = []
    for path in paths[1:]:
        other = load_report(path).flatten()
        shared = [name for name in baseline if name in other]
        if not shared:
            raise ConfigError(f"{paths[0]} and {path} share no metrics")
        for name in shared:
            delta = other[name] - baseline[name]
            rows.append({
                "metric": name,
                "report": str(path),
                "baseline": baseline[name],
                "value": other[name],
                "delta": delta,
                "abs_delta": abs(delta),
            })
    return rows


def write_comparison(rows: Sequence[Dict[str, object]], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=COMPARE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return path
