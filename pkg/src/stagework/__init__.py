"""Workflow manager with an embedded compute cluster and REST API."""

__version__ = "0.1.0"
