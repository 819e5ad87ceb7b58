"""
Report emission for verification runs.

JSON reports carry a "schema" version; tables are written as CSV through pandas.
"""

import json
from pathlib import Path
from typing import Any

import pandas as pd
import structlog

from app.core.constants import REPORT_SCHEMA_VERSION
from app.core.errors import ConfigError

logger = structlog.get_logger()


class ReportWriter:
    """Writes JSON and CSV reports into one output directory"""

    def __init__(self, out_dir: Path) -> None:
        self.out_dir = Path(out_dir)

    def _prepare(self) -> None:
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cannot create output directory {self.out_dir}: {e}") from e

    def write_json(self, name: str, payload: dict[str, Any]) -> Path:
        self._prepare()
        path = self.out_dir / name
        document = {"schema": REPORT_SCHEMA_VERSION, **payload}
        path.write_text(json.dumps(document, indent=2, default=str), encoding="utf-8")
        logger.info("Report written", path=str(path), keys=len(document))
        return path

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        self._prepare()
        path = self.out_dir / name
        frame.to_csv(path, index=False)
        logger.info("Table written", path=str(path), rows=len(frame))
        return path


def read_report(path: Path) -> dict[str, Any]:
    """Load a JSON report, rejecting unknown schema versions"""
    document: dict[str, Any] = json.loads(Path(path).read_text(encoding="utf-8"))
    if document.get("schema") != REPORT_SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported report schema {document.get('schema')!r}")
    return document
