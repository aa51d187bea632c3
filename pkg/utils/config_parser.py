#!/usr/bin/env python3
"""
Config parser utility for INI run configuration files with schema validation.
"""
import configparser
import os
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

from utils.logger import logger


class ConfigError(ValueError):
    """A run configuration file is missing, malformed or fails validation."""


@dataclass(frozen=True)
class FieldSpec:
    """One typed key of a config section."""
    parse: Callable[[str], Any]
    check: Optional[Callable[[Any], bool]] = None
    requirement: str = ""


def parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def parse_int_list(raw: str) -> list:
    return [int(part) for part in raw.split(",") if part.strip()]


def read_run_config(file_path: str, schema: Dict[str, Dict[str, FieldSpec]]) -> Dict[str, Dict[str, Any]]:
    """Read an INI file and return {section: {key: parsed value}} for the keys present."""
    if not os.path.isfile(file_path):
        logger.error(f"Config file not found: {file_path}")
        raise ConfigError(f"config file not found: {file_path}")

    config_parser = configparser.ConfigParser()
    try:
        config_parser.read(file_path, encoding="utf-8")
    except configparser.Error as e:
        logger.error(f"Malformed config file {file_path}: {e}")
        raise ConfigError(f"malformed config file {file_path}: {e}") from e

    values: Dict[str, Dict[str, Any]] = {}
    for section in config_parser.sections():
        if section not in schema:
            raise ConfigError(f"unknown section [{section}] in {file_path}")
        section_schema = schema[section]
        values[section] = {}
        for key, raw in config_parser.items(section):
            if key not in section_schema:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            spec = section_schema[key]
            try:
                parsed = spec.parse(raw)
            except ValueError as e:
                raise ConfigError(f"[{section}] {key}: {e}") from e
            if spec.check is not None and not spec.check(parsed):
                raise ConfigError(f"[{section}] {key} = {raw!r} violates: {spec.requirement}")
            values[section][key] = parsed

    logger.info(f"Loaded run config: {file_path}")
    return values
