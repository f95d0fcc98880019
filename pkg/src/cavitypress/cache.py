"""Content-addressed result cache in a versioned JSON-lines file.

Each line holds one entry::

    {"v": 1, "key": ..., "recipe": {...}, "result": {...}, "sha": ..., "created": epoch}

``sha`` is the hash of the canonical result text, so corruption is detected
without recomputation; ``verify`` additionally recomputes a random 1% of
entries from their recipes and compares them bit-exactly.  Access is
serialized with an exclusive lock on ``.lock`` in the cache directory.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import random
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

VERSION = 1
ENTRIES = "results.jsonl"
STATS = "stats.json"


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    return hashlib.sha256(canonical(obj).encode()).hexdigest()


def default_dir() -> Path | None:
    env = os.environ.get("CAVITYPRESS_CACHE")
    return Path(env) if env else None


@dataclass
class VerifyReport:
    checked: int
    recomputed: int
    mismatches: list = field(default_factory=list)
    corrupt: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches and not self.corrupt


class ResultCache:
    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)

    @contextmanager
    def locked(self):
        with open(self.dir / ".lock", "a+") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)

    # -- storage ----------------------------------------------------------------
    def _read_lines(self) -> list:
        path = self.dir / ENTRIES
        if not path.exists():
            return []
        out = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError:
                    out.append({"v": VERSION, "key": f"<line {lineno}>", "broken": True})
        return out

    def _write_lines(self, entries: list) -> None:
        path = self.dir / ENTRIES
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for e in entries:
                fh.write(canonical(e) + "\n")
        tmp.replace(path)

    def _bump(self, what: str) -> None:
        path = self.dir / STATS
        stats = json.loads(path.read_text()) if path.exists() else {"hits": 0, "misses": 0}
        stats[what] = stats.get(what, 0) + 1
        path.write_text(canonical(stats))

    @staticmethod
    def key_for(recipe: dict) -> str:
        return digest({"v": VERSION, "recipe": recipe})[:32]

    def get(self, recipe: dict):
        key = self.key_for(recipe)
        with self.locked():
            for e in self._read_lines():
                if e.get("key") == key and not e.get("broken") and e.get("sha") == digest(e.get("result")):
                    self._bump("hits")
                    return e["result"]
            self._bump("misses")
        return None

    def put(self, recipe: dict, result: dict) -> str:
        key = self.key_for(recipe)
        entry = {"v": VERSION, "key": key, "recipe": recipe, "result": result, "sha": digest(result),
                 "created": time.time()}
        with self.locked():
            entries = [e for e in self._read_lines() if e.get("key") != key]
            entries.append(entry)
            self._write_lines(entries)
        return key

    # -- administration -------------------------------------------------------------
    def stats(self) -> dict:
        with self.locked():
            entries = self._read_lines()
            path = self.dir / STATS
            counts = json.loads(path.read_text()) if path.exists() else {}
        hits, misses = counts.get("hits", 0), counts.get("misses", 0)
        size = (self.dir / ENTRIES).stat().st_size if (self.dir / ENTRIES).exists() else 0
        return {
            "entries": len(entries),
            "bytes": size,
            "hits": hits,
            "misses": misses,
            "hit_rate": hits / (hits + misses) if hits + misses else 0.0,
        }

    def gc(self, max_age_seconds: float, now: float | None = None) -> int:
        now = time.time() if now is None else now
        with self.locked():
            entries = self._read_lines()
            keep = [e for e in entries if not e.get("broken") and now - e.get("created", 0) <= max_age_seconds]
            self._write_lines(keep)
        return len(entries) - len(keep)

    def verify(self, recompute, fraction: float = 0.01, seed: int = 0) -> VerifyReport:
        """Checksum every entry and recompute a random ``fraction`` of the sound ones.

        ``recompute(recipe) -> result`` must be deterministic.
        """
        with self.locked():
            entries = self._read_lines()
        corrupt, sound = [], []
        for e in entries:
            if e.get("broken") or e.get("v") != VERSION or e.get("sha") != digest(e.get("result")):
                corrupt.append(e.get("key"))
            else:
                sound.append(e)
        mismatches = []
        k = min(len(sound), max(1, round(fraction * len(sound)))) if sound else 0
        for e in random.Random(seed).sample(sound, k):
            if canonical(recompute(e["recipe"])) != canonical(e["result"]):
                mismatches.append(e["key"])
        return VerifyReport(len(entries), k, mismatches, corrupt)
