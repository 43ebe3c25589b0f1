"""Networked back end: authentication, recording upload, transcription and
analysis orchestration, report download, retention, and persistence."""

from .app import create_app
from .config import RetentionPolicy, ServiceConfig

__all__ = ["create_app", "RetentionPolicy", "ServiceConfig"]
