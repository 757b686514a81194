"""INI-style configuration for the command line tools.

Grammar: standard INI as read by configparser.  Section names are module
areas (maps, analysis, horseshoe, burster, cycles, scan, output); keys use
the same names as the long command line flags with dashes replaced by
underscores.  Precedence is built-in default < config file < explicit flag.
The fully resolved option set is echoed into the provenance block of every
JSON output.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .errors import ConfigError

SECTIONS = ("maps", "analysis", "horseshoe", "burster", "cycles", "scan",
            "output")


def read_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    """Parse an INI file into {section: {key: raw string}}.

    Unknown sections are rejected here; unknown keys are rejected later,
    against the option set of the subcommand actually being run.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(
                f"unknown config section [{section}]; expected one of "
                + ", ".join(SECTIONS))
        out[section] = dict(parser.items(section))
    return out


_BOOL_STRINGS = {"true": True, "yes": True, "on": True, "1": True,
                 "false": False, "no": False, "off": False, "0": False}


def coerce(key: str, raw: str, default):
    """Parse a raw config string into the type of the built-in default."""
    if isinstance(default, bool):
        token = raw.strip().lower()
        if token not in _BOOL_STRINGS:
            raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
        return _BOOL_STRINGS[token]
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc
    return raw


def resolve_options(defaults: dict, file_section: dict[str, str],
                    allowed: set[str], cli_values: dict) -> dict:
    """Merge defaults, config file section, and explicit flags, in that order.

    ``allowed`` is the union of option names every subcommand in the section
    understands; keys outside it are configuration errors.  ``cli_values``
    holds only the flags the user actually passed.
    """
    unknown = set(file_section) - allowed
    if unknown:
        raise ConfigError(
            "unknown config key(s): " + ", ".join(sorted(unknown)))
    resolved = dict(defaults)
    for key, raw in file_section.items():
        if key in defaults:
            resolved[key] = coerce(key, raw, defaults[key])
    for key, value in cli_values.items():
        if value is not None:
            resolved[key] = value
    return resolved
