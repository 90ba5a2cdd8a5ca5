"""Recording of service-to-service HTTP hops.

Every outbound call a component makes can be logged as a Hop; the harness
collects the logs to reconstruct who called whom during a scenario. A failed
transport attempt is a hop with status None and the error string set.
"""

import threading
import time
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional


@dataclass
class Hop:
    caller: str
    callee: str
    method: str
    path: str
    status: Optional[int] = None
    error: Optional[str] = None
    started_at: float = 0.0
    ended_at: float = 0.0
    seq: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class HopLog:
    """Thread-safe append-only hop list with reset, one per component."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._hops: List[Hop] = []
        self._seq = 0

    def record(
        self,
        caller: str,
        callee: str,
        method: str,
        path: str,
        status: Optional[int],
        error: Optional[str] = None,
        started_at: Optional[float] = None,
    ) -> Hop:
        ended = time.time()
        with self._lock:
            self._seq += 1
            hop = Hop(
                caller=caller,
                callee=callee,
                method=method,
                path=path,
                status=status,
                error=error,
                started_at=started_at if started_at is not None else ended,
                ended_at=ended,
                seq=self._seq,
            )
            self._hops.append(hop)
        return hop

    def snapshot(self) -> List[Hop]:
        with self._lock:
            return list(self._hops)

    def reset(self) -> None:
        with self._lock:
            self._hops.clear()
            self._seq = 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._hops)
