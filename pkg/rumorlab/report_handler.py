import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from rumorlab import config

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv", "jsonl")


def to_jsonable(value):
    """Plain JSON types; infinities become the string "inf"."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def _open_target(path):
    if path is None or str(path) == "-":
        return sys.stdout, False
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    return target.open("w", encoding="utf-8", newline="\n"), True


def save_records(records, path=None, fmt="json"):
    """Write one record (json) or a list of records (json / jsonl)."""
    try:
        if fmt not in ("json", "jsonl"):
            raise ValueError(f"Records are written as json or jsonl, not {fmt!r}")
        handle, owned = _open_target(path)
        try:
            if fmt == "jsonl":
                rows = records if isinstance(records, list) else [records]
                for row in rows:
                    handle.write(json.dumps(to_jsonable(row)) + "\n")
            else:
                handle.write(json.dumps(to_jsonable(records), indent=2) + "\n")
        finally:
            if owned:
                handle.close()
        logger.info(f"Wrote {fmt} output to {path or 'stdout'}")
        return {"status": "success", "path": str(path) if path else None}
    except Exception as e:
        logger.exception(f"Failed to write {fmt} output to {path}")
        return {"status": "error", "message": str(e)}


def save_frame(frame, path=None, fmt="csv", digits=None):
    """Write a DataFrame as CSV with fixed significant digits, or as records."""
    digits = digits or config.CSV_DIGITS
    if fmt != "csv":
        return save_records(frame.to_dict(orient="records"), path, fmt)
    try:
        handle, owned = _open_target(path)
        try:
            frame.to_csv(handle, index=False, float_format=f"%.{digits}g", lineterminator="\n")
        finally:
            if owned:
                handle.close()
        logger.info(f"Wrote {len(frame)} rows to {path or 'stdout'}")
        return {"status": "success", "path": str(path) if path else None, "rows": len(frame)}
    except Exception as e:
        logger.exception(f"Failed to write CSV output to {path}")
        return {"status": "error", "message": str(e)}
