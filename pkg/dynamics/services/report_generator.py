"""
Report Generator
Writes task results as CSV tables and a JSON-lines summary
"""
import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np

from dynamics.models import ExperimentConfig, TaskKind, TaskResult

logger = logging.getLogger(__name__)

ESTIMATE_COLUMNS = (
    "task", "system", "measure", "quantity", "eps", "n", "delta", "point", "count", "bound",
    "method", "rate", "mode", "statistic", "stderr", "config_hash", "seed",
)
CHAIN_COLUMNS = (
    "chain_id", "instance", "parameters", "left", "middle", "right", "verdict", "z", "config_hash", "seed",
)
EXAMPLE_COLUMNS = (
    "eps", "brin_katok", "interval_low", "interval_high", "lower", "upper", "separated_rate",
    "normalized", "verdict", "config_hash", "seed",
)

ESTIMATES_FILE = "estimates.csv"
CHAINS_FILE = "chains.csv"
EXAMPLE_FILE = "example.csv"
SUMMARY_FILE = "summary.jsonl"


def plain(value: Any) -> Any:
    """Convert numpy scalars, arrays and tuples to JSON-ready values."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def format_cell(value: Any) -> str:
    """One CSV cell: floats round-trip through repr, missing values are empty."""
    value = plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def write_atomic(path: Path, text: str):
    """Write through a temp file in the target directory, then rename over the target."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except Exception:
        try:
            os.remove(tmp_path)
        except OSError:
            pass
        raise


class ReportGenerator:
    """Render task results into the output directory of a config"""

    @staticmethod
    def render_csv(columns: Sequence[str], rows: List[Dict[str, Any]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(column)) for column in columns])
        return buffer.getvalue()

    @staticmethod
    def render_jsonl(records: List[Dict[str, Any]]) -> str:
        return "".join(json.dumps(plain(record), sort_keys=True) + "\n" for record in records)

    @classmethod
    def collect(cls, results: List[TaskResult], config_hash: str, seed: int) -> Dict[str, Any]:
        """
        Split results into estimate, chain and example rows plus summary records.

        Every row and record carries the config hash and the seed.
        """
        stamp = {"config_hash": config_hash, "seed": seed}
        estimates, chains, example, summary = [], [], [], []
        for result in results:
            if result.task == TaskKind.VERIFY:
                for number, row in enumerate(result.rows):
                    chains.append({**row, "instance": number, **stamp})
            elif result.task == TaskKind.EXAMPLE:
                example.extend({**row, **stamp} for row in result.rows)
            else:
                estimates.extend({**row, **stamp} for row in result.rows)
            for record in result.summary:
                summary.append({**record, "status": result.status, **stamp})
            summary.append({
                "task": str(result.task),
                "status": result.status,
                "rows": len(result.rows),
                "check_failures": result.check_failures,
                "error": result.error,
                **stamp,
            })
        return {"estimates": estimates, "chains": chains, "example": example, "summary": summary}

    @classmethod
    def write(cls, config: ExperimentConfig, results: List[TaskResult], config_hash: str) -> List[Path]:
        """Write every table the results have rows for, and the summary; returns the written paths."""
        out = Path(config.out)
        collected = cls.collect(results, config_hash, config.seed)
        tasks = {str(result.task) for result in results}
        written = []
        if tasks - {TaskKind.VERIFY, TaskKind.EXAMPLE}:
            written.append(cls._write(out / ESTIMATES_FILE, cls.render_csv(ESTIMATE_COLUMNS, collected["estimates"])))
        if TaskKind.VERIFY in tasks:
            written.append(cls._write(out / CHAINS_FILE, cls.render_csv(CHAIN_COLUMNS, collected["chains"])))
        if TaskKind.EXAMPLE in tasks:
            written.append(cls._write(out / EXAMPLE_FILE, cls.render_csv(EXAMPLE_COLUMNS, collected["example"])))
        written.append(cls._write(out / SUMMARY_FILE, cls.render_jsonl(collected["summary"])))
        return written

    @staticmethod
    def _write(path: Path, text: str) -> Path:
        write_atomic(path, text)
        logger.info("Wrote %s", path)
        return path
