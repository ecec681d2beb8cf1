"""
Utility helpers shared by the library: atomic file writes, worker-count
detection and small record validators.
"""

import hashlib
import json
import logging
import os
import tempfile
from typing import Any, Iterable, List, Optional

import psutil

from .errors import DiskError

logger = logging.getLogger(__name__)

THREADS_ENV = "EQLF_THREADS"


def missing_keys(data: dict, required_keys: Iterable[str]) -> List[str]:
    """Required keys absent from a parsed document, in the order given"""
    return [key for key in required_keys if key not in data]


def canonical_json(data: Any) -> str:
    """Sorted keys, compact separators; the form hashed for provenance"""
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def short_hash(data: Any) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()[:16]


def atomic_write_bytes(path: str, payload: bytes) -> None:
    """
    Write to a temporary file in the target directory, then rename over
    the destination. Readers never observe a partial file.

    Raises:
        DiskError: the directory cannot be created or the write fails
    """
    directory = os.path.dirname(os.path.abspath(path))
    tmp_path = None
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
        tmp_path = None
    except OSError as e:
        raise DiskError(f"cannot write {path}: {e}") from e
    finally:
        if tmp_path is not None and os.path.exists(tmp_path):
            os.unlink(tmp_path)


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def worker_count(requested: Optional[int] = None) -> int:
    """
    Number of data workers: the request, capped by EQLF_THREADS and by the
    physical core count, never below 1.
    """
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    count = cores if requested is None or requested <= 0 else min(requested, cores)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            count = min(count, int(env))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={env!r}")
    return max(1, count)
