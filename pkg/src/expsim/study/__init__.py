"""Timed decision-study backend: session management, phase flow, durable
response logging, and data export over an HTTP+JSON API."""

from .config import StudyConfig, StudyContent
from .log import RecordLog
from .state import Phase, StudyState
from .server import create_app

__all__ = ["StudyConfig", "StudyContent", "RecordLog", "Phase", "StudyState", "create_app"]
