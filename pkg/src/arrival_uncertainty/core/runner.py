"""RunRecorder times a command and persists its outputs with a run record.

Responsibilities:
    * Measure wall time of one CLI command.
    * Build the :class:`RunRecord` (config digest, tool version, seeds, outputs).
    * Save the resolved system configuration beside the output, so the digest
      can be recomputed from the run directory alone.
    * Render it as JSON, or as CSV with a ``# key=value`` metadata line followed
      by a header row naming units, and write it to stdout and/or a file.

Non-goals:
    * Computing anything; commands hand over finished outputs.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from arrival_uncertainty import __version__
from arrival_uncertainty.utils.logger import bind_run, clear_run, get_logger
from arrival_uncertainty.utils.path_utils import ensure_dir, get_output_path

__all__ = ["Table", "RunRecord", "RunRecorder", "to_jsonable"]

log = get_logger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, paths and tuples into JSON-ready values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class Table:
    """Rows of numbers with one column name and one unit per column."""

    columns: Sequence[str]
    units: Sequence[str]
    rows: List[Sequence[Any]]

    def __post_init__(self) -> None:
        if len(self.columns) != len(self.units):
            raise ValueError(f"{len(self.columns)} columns but {len(self.units)} units")

    @property
    def header(self) -> List[str]:
        return [f"{c} [{u}]" for c, u in zip(self.columns, self.units)]

    def as_records(self) -> List[Dict[str, Any]]:
        return [dict(zip(self.columns, to_jsonable(list(row)))) for row in self.rows]


@dataclass
class RunRecord:
    command: str
    digest: str
    version: str
    seeds: List[int]
    outputs: Dict[str, Any]
    wall_time: float
    timestamp: str
    saved_to: Optional[str] = None
    config_saved_to: Optional[str] = None
    table: Optional[Table] = field(default=None, repr=False)

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("table")
        if self.table is not None:
            data["units"] = dict(zip(self.table.columns, self.table.units))
            data["rows"] = self.table.as_records()
        return to_jsonable(data)


class RunRecorder:
    """Wrap one command run.

    Use as a context manager; call :meth:`finish` with the outputs before leaving.
    Log lines carry the command and digest from construction until
    :meth:`finish` or exit.
    """

    def __init__(
        self,
        command: str,
        digest: str,
        seeds: Sequence[int] = (),
        output_format: str = "json",
        out: Optional[Path] = None,
        outputs_dir: Optional[Path] = None,
        save: bool = True,
        config_text: Optional[str] = None,
    ) -> None:
        if output_format not in ("json", "csv"):
            raise ValueError(f"output format must be 'json' or 'csv', got {output_format!r}")
        self.command = command
        self.digest = digest
        self.seeds = [int(s) for s in seeds]
        self.output_format = output_format
        self.config_text = config_text
        self.save_to: Optional[Path] = None
        if out is not None:
            self.save_to = Path(out)
        elif save:
            self.save_to = get_output_path(outputs_dir or Path("outputs"), command, digest, f".{output_format}")
        self._start = time.perf_counter()
        bind_run(command, digest)

    @property
    def config_path(self) -> Optional[Path]:
        """``<output stem>.config.yaml`` beside the saved output, when there is both."""
        if self.save_to is None or self.config_text is None:
            return None
        return self.save_to.with_name(f"{self.save_to.stem}.config.yaml")

    def __enter__(self) -> "RunRecorder":
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc: Any) -> None:
        clear_run()

    def finish(self, outputs: Dict[str, Any], table: Optional[Table] = None) -> RunRecord:
        record = RunRecord(
            command=self.command,
            digest=self.digest,
            version=__version__,
            seeds=self.seeds,
            outputs=to_jsonable(outputs),
            wall_time=time.perf_counter() - self._start,
            timestamp=datetime.now(timezone.utc).isoformat(),
            saved_to=str(self.save_to) if self.save_to else None,
            config_saved_to=str(self.config_path) if self.config_path else None,
            table=table,
        )
        text = self.render(record)
        if self.save_to is not None:
            ensure_dir(self.save_to.parent)
            self.save_to.write_text(text, encoding="utf-8")
            log.info("Saved %s output to %s", self.command, self.save_to)
        if self.config_path is not None and self.config_text is not None:
            self.config_path.write_text(self.config_text, encoding="utf-8")
            log.debug("Saved resolved configuration to %s", self.config_path)
        log.info("%s finished in %.3f s", self.command, record.wall_time)
        clear_run()
        self.text = text
        return record

    def render(self, record: RunRecord) -> str:
        if self.output_format == "json":
            return json.dumps(record.as_dict(), indent=2) + "\n"
        return render_csv(record)


def _metadata_line(record: RunRecord) -> str:
    meta = {
        "command": record.command,
        "digest": record.digest,
        "version": record.version,
        "seeds": ";".join(str(s) for s in record.seeds),
        "wall_time": f"{record.wall_time:.6f}",
        "timestamp": record.timestamp,
    }
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items())


def render_csv(record: RunRecord) -> str:
    """CSV body: metadata comment, unit-bearing header, rows.

    Without a table the scalar outputs are written as ``quantity,value`` rows.
    """
    buffer = io.StringIO()
    buffer.write(_metadata_line(record) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    table = record.table
    if table is None:
        writer.writerow(["quantity", "value"])
        for key, value in _flatten(record.outputs):
            writer.writerow([key, value])
    else:
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


def _flatten(values: Dict[str, Any], prefix: str = "") -> List[Any]:
    items: List[Any] = []
    for key, value in values.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            items.extend(_flatten(value, name + "."))
        elif isinstance(value, list):
            items.append((name, ";".join(str(v) for v in value)))
        else:
            items.append((name, value))
    return items
