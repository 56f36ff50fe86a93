"""On-disk store of finished sweep points so an interrupted bench can resume.

Layout of the JSON file::

    {"points": {key: [row, ...]}, "fits": {label: {...}}}

Keys hash the suite's cache fields together with the swept value, so a run
with a different size, seed or model never reuses rows from another one.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

logger = logging.getLogger(__name__)


class ResultCache:
    """Completed sweep points and the trend fits computed from them."""

    def __init__(self, path: str | Path) -> None:
        self.file = Path(path)
        self._points: Dict[str, List[Dict[str, Any]]] = {}
        self._fits: Dict[str, Dict[str, float]] = {}
        if self.file.exists():
            try:
                data = json.loads(self.file.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                logger.warning("ignoring unreadable result cache %s", self.file)
                data = {}
            self._points = dict(data.get("points", {}))
            self._fits = dict(data.get("fits", {}))

    @staticmethod
    def point_key(suite: str, fields: Mapping[str, Any], point: Optional[float]) -> str:
        """Deterministic key for one sweep point of ``suite``."""
        payload = json.dumps({"fields": dict(fields), "point": point}, sort_keys=True, default=str)
        return f"{suite}:{hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]}"

    def __contains__(self, key: str) -> bool:
        return key in self._points

    def __len__(self) -> int:
        return len(self._points)

    def rows(self, key: str) -> List[Dict[str, Any]]:
        return list(self._points[key])

    def record(self, key: str, rows: List[Dict[str, Any]]) -> None:
        self._points[key] = list(rows)
        self._save()

    def record_fit(self, label: str, fit: Mapping[str, float]) -> None:
        self._fits[label] = dict(fit)
        self._save()

    def fit(self, label: str) -> Optional[Dict[str, float]]:
        found = self._fits.get(label)
        return dict(found) if found is not None else None

    def clear(self) -> None:
        """Forget every point and fit."""
        self._points = {}
        self._fits = {}
        self._save()

    def _save(self) -> None:
        self.file.parent.mkdir(parents=True, exist_ok=True)
        data = {"points": self._points, "fits": self._fits}
        self.file.write_text(json.dumps(data, indent=2, sort_keys=True), encoding="utf-8")
