"""Report writers: rate tables as CSV, reports as JSON.

Output bytes depend only on the values written: floats use a fixed number of
significant digits, rationals are exact ``p/q`` strings and lines end in LF.
"""

import logging
from pathlib import Path
from typing import Iterable, Sequence

import pandas as pd
from pydantic import BaseModel

from app.config.settings import settings
from app.models.schemas import RateRow
from app.theory.compression import RateCurve

logger = logging.getLogger(__name__)

RATE_COLUMNS = ["N", "epsilon", "M_min", "rate", "target", "gap"]


def rate_rows(curves: Iterable[RateCurve]) -> list[RateRow]:
    return [
        RateRow(N=n, epsilon=float(eps), M_min=m, rate=rate, target=target, gap=gap)
        for curve in curves
        for n, eps, m, rate, target, gap in curve.rows()
    ]


def rate_frame(rows: Sequence[RateRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=RATE_COLUMNS)


def render_rate_csv(rows: Sequence[RateRow]) -> str:
    return rate_frame(rows).to_csv(
        index=False, float_format=f"%.{settings.float_digits}g", lineterminator="\n"
    )


def render_json(report: BaseModel) -> str:
    return report.model_dump_json(indent=2) + "\n"


def _write(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    logger.info(f"Report written to {path}")
    return path


def write_rate_csv(rows: Sequence[RateRow], path: str | Path) -> Path:
    return _write(path, render_rate_csv(rows))


def write_json(report: BaseModel, path: str | Path) -> Path:
    return _write(path, render_json(report))


def summary_table(rows: Sequence[RateRow]) -> str:
    """Plain-text table echoed after a sweep."""
    if not rows:
        return "(no rows)"
    return rate_frame(rows).to_string(index=False, float_format=lambda v: f"{v:.6g}")
