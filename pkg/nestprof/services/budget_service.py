"""
Metadata budget for mining runs.

Metadata size is estimated from the entry counts sinks report (``size_hint``)
times a per-entry byte estimate. The estimate is deliberately coarse: it is a
soft cap meant to stop a run before the process runs out of memory, the way
the pair-based FD miners and static unrolling tend to on large inputs.
"""

import logging
from threading import Lock
from typing import Any, Dict, Optional

from nestprof.config import Settings
from nestprof.exceptions import ResourceLimitError

logger = logging.getLogger(__name__)

WARN_FRACTION = 0.8


class MetadataBudget:
    def __init__(self, max_mem_mb: Optional[int], bytes_per_entry: int = 96, check_interval: int = 256):
        self.max_bytes = max_mem_mb * 1024 * 1024 if max_mem_mb else None
        self.bytes_per_entry = bytes_per_entry
        self.check_interval = max(1, check_interval)
        self.peak_bytes = 0
        self._warned = False
        self.lock = Lock()

    @classmethod
    def from_settings(cls, settings: Settings) -> "MetadataBudget":
        return cls(
            max_mem_mb=settings.max_mem_mb,
            bytes_per_entry=settings.bytes_per_entry,
            check_interval=settings.budget_check_interval,
        )

    @property
    def limited(self) -> bool:
        return self.max_bytes is not None

    def estimate(self, entries: int) -> int:
        return entries * self.bytes_per_entry

    def check(self, entries: int, what: str = "metadata") -> None:
        """Raise ResourceLimitError once the estimated size passes the cap."""
        self.check_bytes(self.estimate(entries), what=what)

    def check_bytes(self, estimated: int, what: str = "metadata") -> None:
        with self.lock:
            self.peak_bytes = max(self.peak_bytes, estimated)
            if self.max_bytes is None:
                return
            if estimated > self.max_bytes:
                logger.error(f"{what} estimated at {estimated / 2**20:.1f} MB exceeds the {self.max_bytes / 2**20:.0f} MB cap")
                raise ResourceLimitError(
                    f"{what} exceeded the memory cap of {self.max_bytes // 2**20} MB "
                    f"(estimated {estimated / 2**20:.1f} MB); raise NESTPROF_MAX_MEM_MB"
                )
            if not self._warned and estimated > WARN_FRACTION * self.max_bytes:
                self._warned = True
                logger.warning(f"{what} is above {int(WARN_FRACTION * 100)}% of the memory cap")

    def get_stats(self) -> Dict[str, Any]:
        with self.lock:
            return {
                "max_mb": self.max_bytes // 2**20 if self.max_bytes else None,
                "peak_estimated_mb": round(self.peak_bytes / 2**20, 2),
                "bytes_per_entry": self.bytes_per_entry,
            }


def create_budget(settings: Settings) -> MetadataBudget:
    return MetadataBudget.from_settings(settings)
