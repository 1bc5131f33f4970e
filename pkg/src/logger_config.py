"""
===============================================================================
CENTRALIZED LOGGING CONFIGURATION FOR THE UNIT ROOT TOOLKIT
===============================================================================
Synchronous rotating-file logging with credential masking.

Log Format: YYYY-MM-DD HH:MM:SS | LEVEL | CATEGORY | ENTITY | ACTION | DETAILS
Categories: SYSTEM, EXPERIMENT, INFERENCE, DATA, ERROR

Files (under the configured logs directory):
  unitroot.log     every structured event
  experiments.log  Monte Carlo grids and null-table builds
  data.log         ingestion, remote fetches, empirical pipeline
  errors.log       ERROR and above
"""

import os
import atexit
import logging
import logging.handlers
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

from log_filters import CredentialFilter, LogEventFilter, RateLimitFilter


class UnitRootLogFormatter(logging.Formatter):
    """
    YYYY-MM-DD HH:MM:SS | LEVEL | CATEGORY | ENTITY | ACTION | DETAILS
    """

    def format(self, record):
        category = getattr(record, 'category', 'SYSTEM')
        entity = getattr(record, 'entity', record.name)
        action = getattr(record, 'action', '')
        details = getattr(record, 'details', '')

        dt = datetime.fromtimestamp(record.created, timezone.utc)
        timestamp = dt.strftime('%Y-%m-%d %H:%M:%S')

        parts = [
            timestamp,
            record.levelname,
            category,
            entity,
            action,
            details if details else record.getMessage()
        ]

        return ' | '.join(str(part) for part in parts)


class UnitRootLogger:
    """
    Structured event logger shared by the CLI, the Monte Carlo harness and
    the empirical pipeline. Library internals keep plain module loggers.
    """

    LOG_FILES = ('unitroot.log', 'experiments.log', 'data.log', 'errors.log')

    def __init__(self, logs_dir: Optional[str] = None):
        raw_dir = logs_dir if logs_dir is not None else os.getenv('UNITROOT_LOGS_DIR', 'logs')
        # empty string disables file output
        self.enabled = raw_dir != ''
        self.logs_dir = Path(raw_dir or '.')
        self.credential_filter = CredentialFilter()
        if self.enabled:
            self._setup_directories()
        self._setup_loggers()

    def _setup_directories(self):
        self.logs_dir.mkdir(parents=True, exist_ok=True)
        for log_file in self.LOG_FILES:
            (self.logs_dir / log_file).touch(exist_ok=True)

    def _setup_loggers(self):
        """Configure the themed loggers"""

        self.main_logger = self._create_logger('unitroot', 'unitroot.log', logging.INFO)

        self.experiment_logger = self._create_logger(
            'unitroot.experiment', 'experiments.log', logging.INFO,
            filter_category='EXPERIMENT', rate_limited=True
        )

        self.data_logger = self._create_logger(
            'unitroot.data', 'data.log', logging.INFO,
            filter_category='DATA'
        )

        self.error_logger = self._create_logger('unitroot.error', 'errors.log', logging.ERROR)

        atexit.register(self.shutdown)

    def _create_logger(self, name: str, file_name: str, level: int,
                       filter_category: Optional[str] = None,
                       rate_limited: bool = False) -> logging.Logger:
        logger = logging.getLogger(name)
        logger.setLevel(level)

        # Prevent duplicate handlers
        if logger.handlers or not self.enabled:
            return logger

        # 10MB per file, keep 30
        file_handler = logging.handlers.RotatingFileHandler(
            self.logs_dir / file_name,
            maxBytes=10 * 1024 * 1024,
            backupCount=30,
            encoding='utf-8'
        )
        file_handler.setFormatter(UnitRootLogFormatter())
        file_handler.addFilter(self.credential_filter)

        if filter_category:
            file_handler.addFilter(LogEventFilter(category=filter_category))
        if rate_limited:
            file_handler.addFilter(RateLimitFilter(max_rate=20, time_window=60))

        logger.addHandler(file_handler)
        logger.propagate = False
        return logger

    def shutdown(self):
        """Flush and close every handler"""
        for logger in (self.main_logger, self.experiment_logger,
                       self.data_logger, self.error_logger):
            for handler in list(logger.handlers):
                handler.flush()

    def log_system_event(self, action: str, details: Any = '', level: int = logging.INFO):
        self._log_with_context(self.main_logger, level, 'SYSTEM', 'toolkit', action, details)

    def log_experiment(self, entity: str, action: str, details: Any = '',
                       level: int = logging.INFO):
        """Monte Carlo cells, null-table builds"""
        self._log_with_context(self.experiment_logger, level, 'EXPERIMENT', entity, action, details)
        self._log_with_context(self.main_logger, level, 'EXPERIMENT', entity, action, details)

    def log_inference(self, entity: str, action: str, details: Any = '',
                      level: int = logging.INFO):
        """Single-series test results"""
        self._log_with_context(self.main_logger, level, 'INFERENCE', entity, action, details)

    def log_data_event(self, entity: str, action: str, details: Any = '',
                       level: int = logging.INFO):
        """Ingestion, fetches, empirical pipeline"""
        self._log_with_context(self.data_logger, level, 'DATA', entity, action, details)
        self._log_with_context(self.main_logger, level, 'DATA', entity, action, details)

    def log_error(self, message: str, exception: Optional[BaseException] = None,
                  entity: str = 'toolkit', context: str = ''):
        details = message
        if exception is not None:
            details += f" | exception={type(exception).__name__}: {exception}"
        if context:
            details += f" | context={context}"

        self._log_with_context(self.error_logger, logging.ERROR, 'ERROR', entity, 'error', details)
        self._log_with_context(self.main_logger, logging.ERROR, 'ERROR', entity, 'error', details)

    def _log_with_context(self, logger: logging.Logger, level: int, category: str,
                          entity: str, action: str, details: Any):
        if not logger.isEnabledFor(level):
            return
        if isinstance(details, dict):
            details = self._format_details(details)
        filtered = self.credential_filter._filter_message(str(details))

        record = logger.makeRecord(logger.name, level, '', 0, filtered, None, None)
        record.category = category
        record.entity = entity
        record.action = action
        record.details = filtered
        logger.handle(record)

    @staticmethod
    def _format_details(details: Dict[str, Any]) -> str:
        """key=value pairs"""
        if not details:
            return ''
        return ' '.join(f"{key}={value}" for key, value in details.items())


_unitroot_logger: Optional[UnitRootLogger] = None


def get_unitroot_logger() -> UnitRootLogger:
    """Global UnitRootLogger instance"""
    global _unitroot_logger
    if _unitroot_logger is None:
        _unitroot_logger = UnitRootLogger()
    return _unitroot_logger


def init_logging(logs_dir: Optional[str] = None, verbosity: int = 0) -> UnitRootLogger:
    """
    Initialize file logging (call once at CLI startup) and a stderr handler
    whose level follows -v flags: 0 WARNING, 1 INFO, 2+ DEBUG.
    """
    global _unitroot_logger
    if logs_dir is not None or _unitroot_logger is None:
        _unitroot_logger = UnitRootLogger(logs_dir)

    console_level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    root = logging.getLogger()
    if not any(getattr(h, '_unitroot_console', False) for h in root.handlers):
        console = logging.StreamHandler()
        console.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
        console._unitroot_console = True
        root.addHandler(console)
    for handler in root.handlers:
        if getattr(handler, '_unitroot_console', False):
            handler.setLevel(console_level)
    root.setLevel(min(console_level, logging.INFO))

    return _unitroot_logger
