"""
CSV and JSON output for result tables, and JSON input for config files and zero sets
"""
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np
from pydantic import BaseModel

from models.models import ZeroSet
from utils.errors import DomainError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def format_number(value: Any) -> Any:
    """17 significant digits so binary64 values round-trip"""
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def to_plain(value: Any) -> Any:
    """numpy arrays, scalars and pydantic models to JSON-ready Python values"""
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    return value


def _open_target(path: Optional[Path]) -> TextIO:
    if path is None:
        return sys.stdout
    path = Path(path)
    if path.parent and not path.parent.exists():
        raise DomainError(f"output directory {path.parent} does not exist")
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as e:
        raise DomainError(f"cannot write {path}: {e.strerror or str(e)}")


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """RFC 4180 text with '.' decimals"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(value) for value in row])
    return buffer.getvalue()


def write_csv(path: Optional[Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    text = render_csv(header, rows)
    target = _open_target(path)
    try:
        target.write(text)
    finally:
        if target is not sys.stdout:
            target.close()
    logger.debug(f"Wrote CSV table with columns {list(header)} to {path or 'stdout'}")


def render_json(payload: Dict[str, Any]) -> str:
    document = {"schema_version": SCHEMA_VERSION}
    document.update(to_plain(payload))
    return json.dumps(document, indent=2)


def write_json(path: Optional[Path], payload: Dict[str, Any]) -> None:
    text = render_json(payload)
    target = _open_target(path)
    try:
        target.write(text + "\n")
    finally:
        if target is not sys.stdout:
            target.close()
    logger.debug(f"Wrote JSON document with keys {sorted(payload)} to {path or 'stdout'}")


def matrix_rows(name: str, matrix: np.ndarray) -> List[List[Any]]:
    """Long-format rows (name, i, j, value) with 1-based indices"""
    return [[name, i + 1, j + 1, matrix[i, j]] for i in range(matrix.shape[0]) for j in range(matrix.shape[1])]


def load_json_object(text: str, source: str = "input") -> Dict[str, Any]:
    """
    Parse a JSON object

    Raises:
        DomainError: malformed JSON or a non-object document
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise DomainError(f"{source} is not valid JSON: {str(e)}")
    if not isinstance(document, dict):
        raise DomainError(f"{source} must hold a JSON object, got {type(document).__name__}")
    return document


def load_config_file(path: Path) -> Dict[str, Any]:
    """Config file keys use the flag names with '-' replaced by '_'"""
    path = Path(path)
    if not path.is_file():
        raise DomainError(f"config file {path} not found")
    document = load_json_object(path.read_text(encoding="utf-8"), source=str(path))
    return {key.replace("-", "_"): value for key, value in document.items()}


def zeroset_payload(zeroset: ZeroSet) -> Dict[str, Any]:
    return {"kind": "zeroset", "zeroset": zeroset}


def read_zeroset_json(text: str) -> ZeroSet:
    """ZeroSet back from the JSON written by the zeros command"""
    document = load_json_object(text, source="zero set")
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DomainError(f"unsupported schema_version {version!r}")
    if "zeroset" not in document:
        raise DomainError("document carries no zeroset")
    return ZeroSet.model_validate(document["zeroset"])
