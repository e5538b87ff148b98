"""Append-only record log with per-append fsync and replay.

One JSON object per line.  An append is durable before it returns, so a
caller that acknowledges after `append` never loses an acknowledged record.
Replay tolerates a trailing partial line (a write cut short by a crash).
"""
from __future__ import annotations

import json
import os
from pathlib import Path

__all__ = ["RecordLog"]


class RecordLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fd = os.open(self.path, os.O_APPEND | os.O_CREAT | os.O_WRONLY, 0o644)

    def append(self, record: dict) -> None:
        """Serialize, write, and fsync one record; durable on return."""
        line = json.dumps(record, separators=(",", ":"), sort_keys=True) + "\n"
        os.write(self._fd, line.encode("utf-8"))
        os.fsync(self._fd)

    def replay(self):
        """Yield every complete record currently on disk, oldest first."""
        if not self.path.exists():
            return
        with self.path.open("rb") as fh:
            for raw in fh:
                if not raw.endswith(b"\n"):
                    break  # torn final write; ignore the fragment
                line = raw.strip()
                if not line:
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError:
                    break  # corrupted tail; everything before it was durable

    def close(self) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
