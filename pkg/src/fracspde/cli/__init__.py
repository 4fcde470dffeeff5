"""Batch front end: ``fracspde {fbm,integrate,solve,certify,converge}``."""

from .main import EXIT_CERT, EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, build_parser, main

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_INVALID", "EXIT_CERT", "EXIT_NUMERIC"]
