"""HTTP transport shared by every outbound caller in the suite.

Centralizes the retry contract: only connect-phase failures are retried,
with a fixed backoff. Once any response has been received, or once the
request body may have reached the server (read timeout), the call is never
re-sent, so a POST can not be duplicated by this layer.
"""

import time
from typing import Dict, Optional
from urllib.parse import urlsplit

import requests

from .hops import HopLog

DEFAULT_BACKOFF_S = 0.2


class TransportUnreachable(Exception):
    """No response after retries: connection failed or timed out."""


def http_request(
    session: requests.Session,
    method: str,
    url: str,
    *,
    timeout_s: float,
    retry_count: int = 0,
    backoff_s: float = DEFAULT_BACKOFF_S,
    headers: Optional[Dict[str, str]] = None,
    body: Optional[bytes] = None,
    caller: Optional[str] = None,
    callee: Optional[str] = None,
    hop_log: Optional[HopLog] = None,
) -> requests.Response:
    path = urlsplit(url).path
    attempts = retry_count + 1
    last_error: Optional[Exception] = None
    started = time.time()
    for attempt in range(attempts):
        try:
            response = session.request(
                method,
                url,
                headers=headers,
                data=body,
                timeout=timeout_s,
                allow_redirects=False,
            )
        except (requests.ConnectionError, requests.exceptions.ConnectTimeout) as exc:
            last_error = exc
            if attempt + 1 < attempts:
                time.sleep(backoff_s)
                continue
            break
        except requests.exceptions.ReadTimeout as exc:
            # the request went out; retrying could duplicate it
            last_error = exc
            break
        if hop_log is not None and caller and callee:
            hop_log.record(
                caller, callee, method, path, response.status_code, started_at=started
            )
        return response
    if hop_log is not None and caller and callee:
        hop_log.record(
            caller,
            callee,
            method,
            path,
            None,
            error=type(last_error).__name__,
            started_at=started,
        )
    raise TransportUnreachable(f"{method} {url}: {last_error}")


def timeout_seconds(timeout_ms: int) -> float:
    return max(timeout_ms, 1) / 1000.0
