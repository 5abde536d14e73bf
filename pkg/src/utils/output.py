"""Atomic result writers with a provenance header"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, TextIO, Union

import pandas as pd

from .. import __version__

FLOAT_FORMAT = "%.17g"


def provenance(config_hash: str, seed: int) -> Dict[str, Any]:
    return {"config_hash": config_hash, "seed": seed, "version": __version__}


def atomic_write(path: Path, writer: Callable[[TextIO], None]) -> Path:
    """Write through a temporary file in the target directory, then rename over the target"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            writer(handle)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return path


def write_csv(
    path: Path,
    rows: Union[pd.DataFrame, Iterable[Dict[str, Any]]],
    columns: List[str],
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    """CSV with a ``# key=value,...`` comment line, then the header and 17-digit floats"""
    frame = rows[columns] if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)

    def writer(handle: TextIO) -> None:
        if meta:
            handle.write("# " + ",".join(f"{key}={value}" for key, value in meta.items()) + "\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    return atomic_write(path, writer)


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_jsonl(path: Path, records: Iterable[Dict[str, Any]], meta: Optional[Dict[str, Any]] = None) -> Path:
    """One JSON object per line; the first line carries the provenance when given"""

    def writer(handle: TextIO) -> None:
        if meta:
            handle.write(json.dumps({"provenance": meta}) + "\n")
        for record in records:
            handle.write(json.dumps(record, default=_to_builtin) + "\n")

    return atomic_write(path, writer)


def write_json(path: Path, payload: Any) -> Path:
    return atomic_write(path, lambda handle: json.dump(payload, handle, indent=2, default=_to_builtin))


def write_text(path: Path, text: str) -> Path:
    return atomic_write(path, lambda handle: handle.write(text))


def _to_builtin(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "model_dump"):
        return value.model_dump()
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"cannot serialize {type(value).__name__}")
