"""Write-once answer cache backed by a JSON-lines file.

Row schema: ``{"meme_id", "focus", "params_fingerprint", "answer", "suppressed"}``.
Rows are keyed by ``(meme_id, focus, params_fingerprint)``; the first row for
a key wins and later puts for it are ignored. Single writer only.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator, NamedTuple, Optional

from ..errors import ProCapError


class CacheKey(NamedTuple):
    meme_id: str
    focus: str
    params_fingerprint: str


class CacheRow(NamedTuple):
    meme_id: str
    focus: str
    params_fingerprint: str
    answer: str
    suppressed: bool

    @property
    def key(self) -> CacheKey:
        return CacheKey(self.meme_id, self.focus, self.params_fingerprint)

    def to_json(self) -> dict:
        return self._asdict()


class AnswerCache:
    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self.rows: dict[CacheKey, CacheRow] = {}
        if self.path is not None and self.path.exists():
            self._read()

    def _read(self):
        with self.path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    row = CacheRow(str(obj["meme_id"]), obj["focus"], obj["params_fingerprint"],
                                   obj["answer"], bool(obj["suppressed"]))
                except (ValueError, KeyError) as exc:
                    raise ProCapError(f"{self.path}:{lineno}: malformed cache row ({exc})") from None
                self.rows.setdefault(row.key, row)

    def get(self, key: CacheKey) -> Optional[CacheRow]:
        return self.rows.get(key)

    def __contains__(self, key) -> bool:
        return key in self.rows

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[CacheRow]:
        return iter(self.rows.values())

    def put(self, row: CacheRow) -> bool:
        """Store a row; returns False (and changes nothing) if the key exists."""
        if row.key in self.rows:
            return False
        self.rows[row.key] = row
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(row.to_json(), ensure_ascii=False) + "\n")
        return True

    def fingerprints(self) -> set[str]:
        return {k.params_fingerprint for k in self.rows}


class BufferedCache:
    """Read-through view that holds new rows until :meth:`commit`.

    Lets concurrent workers generate answers while the owning cache is
    written by one thread in a fixed order.
    """

    def __init__(self, base: AnswerCache):
        self.base = base
        self.pending: dict[CacheKey, CacheRow] = {}

    def get(self, key):
        return self.pending.get(key) or self.base.get(key)

    def put(self, row):
        if self.get(row.key) is not None:
            return False
        self.pending[row.key] = row
        return True

    def commit(self) -> int:
        written = sum(1 for row in self.pending.values() if self.base.put(row))
        self.pending.clear()
        return written
