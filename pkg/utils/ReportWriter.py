import json
import logging
import sys
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class ReportWriter:
    """Writes result tables as CSV or JSON with a fixed number of decimals.

    CSV goes through pandas with a fixed float format. JSON stores every
    number as a decimal string, so parsing and re-dumping a file gives the
    same bytes.
    """

    def __init__(self, output_format: str = "csv", precision: int = 12):
        if output_format not in ("csv", "json"):
            raise ValueError(f"Unknown output format: {output_format}")
        self.output_format = output_format
        self.precision = precision

    def _plain(self, value: Any) -> Any:
        if is_dataclass(value) and not isinstance(value, type):
            return {k: self._plain(v) for k, v in asdict(value).items()}
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, dict):
            return {str(k): self._plain(v) for k, v in value.items()}
        if isinstance(value, (list, tuple, np.ndarray)):
            return [self._plain(v) for v in value]
        if isinstance(value, np.generic):
            return value.item()
        return value

    def format_number(self, value: Any) -> Any:
        """Decimal string for numbers; bools, strings and None pass through."""
        if isinstance(value, bool) or value is None or isinstance(value, str):
            return value
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, complex):
            return {"re": self.format_number(value.real), "im": self.format_number(value.imag)}
        text = f"{float(value):.{self.precision}f}"
        return "0." + "0" * self.precision if text.startswith("-") and float(text) == 0.0 else text

    def _stringify(self, value: Any) -> Any:
        if isinstance(value, dict):
            return {k: self._stringify(v) for k, v in value.items()}
        if isinstance(value, list):
            return [self._stringify(v) for v in value]
        return self.format_number(value)

    def to_json_text(self, payload: Any) -> str:
        return json.dumps(self._stringify(self._plain(payload)), indent=2) + "\n"

    def to_csv_text(self, rows: List[Dict[str, Any]]) -> str:
        df = pd.DataFrame([self._plain(row) for row in rows])
        return df.to_csv(index=False, float_format=f"%.{self.precision}f", lineterminator="\n")

    def render(self, rows: List[Dict[str, Any]], extra: Optional[Dict[str, Any]] = None) -> str:
        """One table in the configured format; extra fields ride along in JSON only."""
        if self.output_format == "csv":
            return self.to_csv_text(rows)
        payload: Dict[str, Any] = {"rows": rows}
        if extra:
            payload.update(extra)
        return self.to_json_text(payload)

    def write(self, text: str, output_path: Optional[str] = None):
        if output_path is None:
            sys.stdout.write(text)
            return
        Path(output_path).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {output_path}")

    @staticmethod
    def sidecar_path(output_path: str, suffix: str) -> str:
        """report.csv -> report.<suffix>.csv"""
        path = Path(output_path)
        return str(path.with_name(f"{path.stem}.{suffix}{path.suffix or '.csv'}"))
