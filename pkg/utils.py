"""
Utility functions for configuration files, report writing and input validation.
"""
import io
import os
import re
import csv
import json
import hashlib
import configparser
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple, Type

import numpy as np
from pydantic import BaseModel, ValidationError

from config import APP_NAME, APP_VERSION
from models import ConfigError, OutputFormat

CONFIG_SECTIONS = ("analysis", "source", "scan")


def config_hash(data: Dict[str, Any]) -> str:
    """Stable SHA-256 fingerprint of a configuration mapping."""
    text = json.dumps(data, sort_keys=True, default=_json_default)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def _coerce(text: str):
    # comma lists become tuples of floats (e.g. split = 0.5, 0.25, 0.25)
    if "," in text:
        try:
            return tuple(float(part) for part in text.split(","))
        except ValueError:
            raise ConfigError(f"cannot parse list value '{text}'")
    return text.strip()


def load_run_config(path: str) -> Dict[str, Dict[str, Any]]:
    """Read an INI-style run configuration into {section: {key: value}}."""
    if not os.path.isfile(path):
        raise ConfigError(f"configuration file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"malformed configuration file {path}: {e}")
    unknown = [s for s in parser.sections() if s not in CONFIG_SECTIONS]
    if unknown:
        raise ConfigError(f"unknown configuration sections: {', '.join(unknown)}")
    return {section: {k: _coerce(v) for k, v in parser.items(section)} for section in parser.sections()}


def build_model(model: Type[BaseModel], file_values: Optional[Dict[str, Any]] = None,
                overrides: Optional[Dict[str, Any]] = None) -> BaseModel:
    """Instantiate a config model from file values with CLI overrides on top (None means unset)."""
    values = dict(file_values or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(values) - set(model.model_fields))
    if unknown:
        raise ConfigError(f"unknown {model.__name__} keys: {', '.join(unknown)}")
    try:
        return model(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid {model.__name__}: {e.errors()[0]['msg']} ({e.errors()[0]['loc']})")


def provenance_line(cfg_hash: str, seed: Optional[int] = None) -> str:
    """Header comment carried by every CSV output."""
    return f"# {APP_NAME} {APP_VERSION} config_hash={cfg_hash} seed={seed if seed is not None else 'none'}"


def write_csv_table(path: str, columns: Sequence[str], rows: Iterable[Sequence[Any]],
                    cfg_hash: str = "", seed: Optional[int] = None) -> int:
    """Write a CSV with a provenance comment and a header row; returns the number of rows."""
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(provenance_line(cfg_hash, seed) + "\n")
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])
            count += 1
    return count


def write_csv_array(path: str, columns: Sequence[str], data: np.ndarray,
                    cfg_hash: str = "", seed: Optional[int] = None, mode: str = "w"):
    """Append-friendly numeric CSV writer for large scan blocks."""
    with open(path, mode, encoding="utf-8") as handle:
        if mode == "w":
            handle.write(provenance_line(cfg_hash, seed) + "\n")
            handle.write(",".join(columns) + "\n")
        if data.size:
            np.savetxt(handle, data, delimiter=",", fmt="%.17g")


def read_csv_table(path: str) -> Tuple[list, list]:
    """Read a CSV written by write_csv_table, skipping comment lines."""
    with open(path, newline="", encoding="utf-8") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    reader = csv.reader(lines)
    columns = next(reader, [])
    return columns, [row for row in reader]


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(path: Optional[str], data: Dict[str, Any]) -> str:
    """Serialize a report; writes it to path when one is given and returns the text."""
    text = json.dumps(data, indent=2, sort_keys=True, default=_json_default)
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    return text


def safe_stem(name: str) -> str:
    """Input-file stem reduced to [A-Za-z0-9._-] for companion output names."""
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("._") or "stream"


def derived_path(out_dir: str, stem: str, suffix: str) -> str:
    """Path of a companion output file, e.g. <out>/<stem>_jacobi_same_pulse.csv."""
    return os.path.join(out_dir, f"{safe_stem(stem)}{suffix}")


def validate_input_path(path: Optional[str]) -> Tuple[bool, str]:
    """Validate an input file and return (is_valid, error_message)."""
    if not path:
        return False, "An input file is required"
    if not os.path.exists(path):
        return False, f"Input file not found: {path}"
    if not os.path.isfile(path):
        return False, f"Input path is not a file: {path}"
    if not os.access(path, os.R_OK):
        return False, f"Input file is not readable: {path}"
    return True, ""


def validate_output_path(path: Optional[str], is_dir: bool = False) -> Tuple[bool, str]:
    """Validate an output location (creating directories) and return (is_valid, error_message)."""
    if not path:
        return True, ""
    target = path if is_dir else (os.path.dirname(os.path.abspath(path)) or ".")
    try:
        os.makedirs(target, exist_ok=True)
    except OSError as e:
        return False, f"Cannot create output directory {target}: {e}"
    if not os.access(target, os.W_OK):
        return False, f"Output directory is not writable: {target}"
    return True, ""


def summary_excerpt(summary: Optional[str], max_length: int = 80) -> str:
    """One-line excerpt of a stored JSON summary for history listings."""
    flat = " ".join((summary or "").split())
    return flat if len(flat) <= max_length else flat[:max_length - 1] + "…"


def flatten_report(data: Dict[str, Any], prefix: str = "") -> list:
    """(key, value) rows of a nested report; nested keys are joined with dots."""
    rows = []
    for key in sorted(data):
        value = data[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(flatten_report(value, f"{name}."))
        elif isinstance(value, (list, tuple)) and all(not isinstance(v, (dict, list)) for v in value):
            rows.append((name, ";".join(str(_format_cell(v)) for v in value)))
        elif isinstance(value, list):
            for i, item in enumerate(value):
                rows.extend(flatten_report(item, f"{name}.{i}.") if isinstance(item, dict)
                            else [(f"{name}.{i}", item)])
        else:
            rows.append((name, "" if value is None else _format_cell(value)))
    return rows


def format_report(data: Dict[str, Any], fmt: OutputFormat = OutputFormat.JSON) -> str:
    """Report text in the requested output format."""
    if OutputFormat(fmt) == OutputFormat.JSON:
        return write_json(None, data)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(flatten_report(data))
    return buf.getvalue().rstrip("\n")
