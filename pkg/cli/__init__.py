from .models import REQUIRED_KEYS, Command, RunConfig, build_config
from .parser import parse_config, parse_flags, parse_key_values
from .runner import EXIT_ASSERTION, EXIT_ERROR, EXIT_OK, render_csv, run

__all__ = [
    "Command",
    "EXIT_ASSERTION",
    "EXIT_ERROR",
    "EXIT_OK",
    "REQUIRED_KEYS",
    "RunConfig",
    "build_config",
    "parse_config",
    "parse_flags",
    "parse_key_values",
    "render_csv",
    "run",
]
