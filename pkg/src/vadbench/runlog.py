"""Structured JSONL run logging with wall-clock timing, thread-safe."""
from __future__ import annotations

import json
import threading
import time
from pathlib import Path


class RunLog:
    """Appends one JSON object per event; safe to share across workers."""

    def __init__(self, path: str | Path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = open(path, "a", encoding="utf-8")
        self._lock = threading.Lock()
        self._started = time.monotonic()

    def event(self, payload: dict) -> None:
        row = {"elapsed": round(time.monotonic() - self._started, 4)}
        row.update(payload)
        line = json.dumps(row, sort_keys=True)
        with self._lock:
            self._handle.write(line + "\n")
            self._handle.flush()

    def close(self) -> None:
        with self._lock:
            self._handle.close()

    def __enter__(self) -> "RunLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
