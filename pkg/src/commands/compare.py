"""compare: per-metric deltas between reports"""

import logging
from pathlib import Path
from typing import Sequence

from src.analytics.report import compare_reports, write_comparison
from src.config import RunConfig

logger = logging.getLogger(__name__)


def cmd_compare(config: RunConfig, reports: Sequence[str]) -> Path:
    """Deltas of every report against the first one, written to reports/compare.csv"""
    rows = compare_reports(reports)
    path = write_comparison(rows, config.paths().reports / "compare.csv")
    largest = sorted(rows, key=lambda row: row["abs_delta"], reverse=True)[:10]
    for row in largest:
        print(f"{row['metric']:<60} {row['baseline']:>10.4f} {row['value']:>10.4f} {row['delta']:>+10.4f}")
    print(f"compare: {len(rows)} rows -> {path}")
    return path
