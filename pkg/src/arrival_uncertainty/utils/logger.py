"""Logging for the library and the ``arrival`` command.

Library modules only call :func:`get_logger`; the CLI calls
:func:`configure_logging` once, which installs a single stderr handler on the
root logger (stdout carries the run record and nothing else).

While a command is running its name and configuration digest are bound with
:func:`bind_run`, and every line carries them, so a log excerpt can be matched
to the saved record. Python warnings raised by scipy (integration accuracy,
ODE step control) are routed through the same handler.

Environment variables:
	LOG_LEVEL   -> DEBUG | INFO | WARNING | ERROR | CRITICAL or a number (default: INFO)
	LOG_FORMAT  -> "plain" (default) or "json" (one object per line)
	LOG_COLOR   -> "1" to color level names on a terminal (plain format only)
"""

from __future__ import annotations

import json
import logging
import os
import sys
from typing import Optional, Tuple

__all__ = ["configure_logging", "get_logger", "bind_run", "clear_run", "current_run"]

DIGEST_PREFIX = 12
PLAIN_FORMAT = "%(asctime)s %(levelname)-7s %(name)s%(run)s: %(message)s"
DATE_FORMAT = "%H:%M:%S"

_CONFIGURED = False
_RUN: Optional[Tuple[str, str]] = None

_LEVEL_COLORS = {
	logging.DEBUG: "\x1b[37m",
	logging.INFO: "\x1b[36m",
	logging.WARNING: "\x1b[33m",
	logging.ERROR: "\x1b[31m",
	logging.CRITICAL: "\x1b[41m",
}


def bind_run(command: str, digest: str) -> None:
	"""Tag subsequent log lines with ``command`` and the digest prefix."""
	global _RUN
	_RUN = (command, digest[:DIGEST_PREFIX])


def clear_run() -> None:
	global _RUN
	_RUN = None


def current_run() -> Optional[Tuple[str, str]]:
	return _RUN


class _RunFilter(logging.Filter):
	"""Stamp each record with the bound run; never drops records."""

	def filter(self, record: logging.LogRecord) -> bool:
		run = _RUN
		record.command = run[0] if run else None
		record.digest = run[1] if run else None
		record.run = f" [{run[0]} {run[1]}]" if run else ""
		return True


class _JsonFormatter(logging.Formatter):
	def format(self, record: logging.LogRecord) -> str:
		data = {
			"time": self.formatTime(record, "%Y-%m-%dT%H:%M:%S"),
			"level": record.levelname,
			"name": record.name,
			"message": record.getMessage(),
		}
		if getattr(record, "command", None):
			data["command"] = record.command
			data["digest"] = record.digest
		fields = getattr(record, "fields", None)
		if isinstance(fields, dict):
			data.update({k: v for k, v in fields.items() if k not in data})
		if record.exc_info:
			data["exc"] = self.formatException(record.exc_info)
		return json.dumps(data, ensure_ascii=False, default=str)


class _ColorFormatter(logging.Formatter):  # pragma: no cover (terminal only)
	def format(self, record: logging.LogRecord) -> str:
		text = super().format(record)
		color = _LEVEL_COLORS.get(record.levelno)
		return f"{color}{text}\x1b[0m" if color else text


def _env_level() -> Tuple[int, Optional[str]]:
	"""Level from ``LOG_LEVEL`` plus the raw value when it was not understood."""
	raw = os.getenv("LOG_LEVEL", "").strip()
	if not raw:
		return logging.INFO, None
	if raw.isdigit():
		return int(raw), None
	level = logging.getLevelName(raw.upper())
	if isinstance(level, int):
		return level, None
	return logging.INFO, raw


def configure_logging(level: Optional[int] = None, force: bool = False) -> None:
	"""Install the stderr handler once; later calls only adjust the level.

	Parameters
	----------
	level: int | None
		Numeric level overriding ``LOG_LEVEL`` (the CLI passes DEBUG for ``--verbose``).
	force: bool
		Rebuild the handler, e.g. after changing ``LOG_FORMAT``.
	"""
	global _CONFIGURED
	if _CONFIGURED and not force:
		if level is not None:
			logging.getLogger().setLevel(level)
		return

	handler = logging.StreamHandler(sys.stderr)
	handler.addFilter(_RunFilter())
	if os.getenv("LOG_FORMAT", "plain").strip().lower() == "json":
		handler.setFormatter(_JsonFormatter())
	elif os.getenv("LOG_COLOR", "").strip() == "1" and sys.stderr.isatty():
		handler.setFormatter(_ColorFormatter(PLAIN_FORMAT, DATE_FORMAT))
	else:
		handler.setFormatter(logging.Formatter(PLAIN_FORMAT, DATE_FORMAT))

	env_level, rejected = _env_level()
	root = logging.getLogger()
	root.handlers.clear()
	root.addHandler(handler)
	root.setLevel(level if level is not None else env_level)
	logging.captureWarnings(True)
	_CONFIGURED = True
	if rejected is not None:
		get_logger(__name__).warning("LOG_LEVEL=%r is not a level name; using INFO", rejected)


def get_logger(name: str) -> logging.Logger:
	"""Module logger; installs no handlers, so importing the library stays silent."""
	return logging.getLogger(name)
