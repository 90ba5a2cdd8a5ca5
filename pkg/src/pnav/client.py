"""FHIR R4 REST client: read, search and create against any FHIR base URL.

This is the only module that talks to an upstream FHIR server. Responses are
decoded leniently (unknown members ride through; per-entry violations do not
abort a whole searchset) because a full server returns far more than the
modeled subset.
"""

from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple
from urllib.parse import quote, urlencode, urlsplit

import requests

from .fhir import (
    FHIR_JSON_MEDIA_TYPE,
    Bundle,
    BundleEntry,
    ID_PATTERN,
    OperationOutcome,
    UnknownResourceType,
    decode_resource,
    serialize_resource,
)
from .hops import HopLog
from .transport import TransportUnreachable, http_request, timeout_seconds

CLIENT_RESOURCE_TYPES = ("Patient", "Appointment")

DEFAULT_TIMEOUT_MS = 5000
DEFAULT_RETRY_COUNT = 2
DEFAULT_PAGE_CAP = 100


class FhirClientError(Exception):
    pass


class Unreachable(FhirClientError):
    """Connect failure or timeout, after retries."""


class RemoteError(FhirClientError):
    def __init__(self, status: int, outcome: Optional[OperationOutcome] = None):
        self.status = status
        self.outcome = outcome
        super().__init__(f"upstream returned HTTP {status}")


class NotFound(FhirClientError):
    def __init__(self, resource_type: str, resource_id: str):
        self.resource_type = resource_type
        self.resource_id = resource_id
        super().__init__(f"{resource_type}/{resource_id} not found upstream")


class Rejected(FhirClientError):
    def __init__(self, status: int, outcome: Optional[OperationOutcome] = None):
        self.status = status
        self.outcome = outcome
        super().__init__(f"upstream rejected the resource (HTTP {status})")


class ProtocolError(FhirClientError):
    pass


@dataclass(frozen=True)
class FhirEndpoint:
    """Where and how to reach one FHIR server; immutable, safe to share."""

    base_url: str
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    retry_count: int = DEFAULT_RETRY_COUNT
    page_cap: int = DEFAULT_PAGE_CAP

    def __post_init__(self) -> None:
        parts = urlsplit(self.base_url)
        if not parts.scheme or not parts.netloc:
            raise ValueError(f"base_url must be absolute: {self.base_url!r}")
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")
        if self.retry_count < 0:
            raise ValueError("retry_count must be >= 0")
        object.__setattr__(self, "base_url", self.base_url.rstrip("/"))


def _decode_body(response: requests.Response) -> Tuple[Any, list]:
    try:
        data = response.json()
    except ValueError as exc:
        raise ProtocolError(f"body is not JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ProtocolError("body is not a JSON object")
    try:
        return decode_resource(data)
    except UnknownResourceType as exc:
        raise ProtocolError(str(exc)) from None


def _maybe_outcome(response: requests.Response) -> Optional[OperationOutcome]:
    try:
        resource, _ = _decode_body(response)
    except ProtocolError:
        return None
    return resource if isinstance(resource, OperationOutcome) else None


def parse_location_id(location: str, resource_type: str) -> Optional[str]:
    """Pull the assigned id from a create Location header.

    Accepts ``{base}/{type}/{id}`` with or without a ``/_history/{n}`` tail.
    """
    path = urlsplit(location).path
    segments = [s for s in path.split("/") if s]
    if len(segments) >= 3 and segments[-2] == "_history":
        segments = segments[:-2]
    if len(segments) < 2 or segments[-2] != resource_type:
        return None
    candidate = segments[-1]
    if not ID_PATTERN.match(candidate):
        return None
    return candidate


class FhirClient:
    """Issues FHIR RESTful interactions against one endpoint.

    ``caller``/``callee`` label outbound hops when a hop log is attached.
    Instances hold only immutable config plus a requests session; concurrent
    calls are independent.
    """

    def __init__(
        self,
        endpoint: FhirEndpoint,
        session: Optional[requests.Session] = None,
        hop_log: Optional[HopLog] = None,
        caller: str = "client",
        callee: str = "fhir-server",
    ) -> None:
        self.endpoint = endpoint
        self.session = session or requests.Session()
        self.hop_log = hop_log
        self.caller = caller
        self.callee = callee

    def _request(
        self, method: str, url: str, body: Optional[bytes] = None
    ) -> requests.Response:
        headers = {"Accept": FHIR_JSON_MEDIA_TYPE}
        if body is not None:
            headers["Content-Type"] = FHIR_JSON_MEDIA_TYPE
        try:
            return http_request(
                self.session,
                method,
                url,
                timeout_s=timeout_seconds(self.endpoint.timeout_ms),
                retry_count=self.endpoint.retry_count,
                headers=headers,
                body=body,
                caller=self.caller,
                callee=self.callee,
                hop_log=self.hop_log,
            )
        except TransportUnreachable as exc:
            raise Unreachable(str(exc)) from None

    def search(
        self, resource_type: str, params: Sequence[Tuple[str, str]] = ()
    ) -> Bundle:
        """GET {base}/{type}?{query}, following next links transparently.

        Match entries from every page are concatenated; total is taken from
        the first page. More pages than the endpoint's cap is a protocol
        error rather than silent truncation.
        """
        if resource_type not in CLIENT_RESOURCE_TYPES:
            raise ValueError(f"unsupported search type: {resource_type}")
        query = urlencode(list(params), quote_via=quote)
        url = f"{self.endpoint.base_url}/{resource_type}"
        if query:
            url = f"{url}?{query}"

        entries: List[BundleEntry] = []
        total: Optional[int] = None
        pages = 0
        next_url: Optional[str] = url
        while next_url:
            if pages >= self.endpoint.page_cap:
                raise ProtocolError(
                    f"search exceeded the {self.endpoint.page_cap}-page cap"
                )
            response = self._request("GET", next_url)
            if response.status_code < 200 or response.status_code >= 300:
                raise RemoteError(response.status_code, _maybe_outcome(response))
            resource, _ = _decode_body(response)
            if not isinstance(resource, Bundle) or resource.type != "searchset":
                raise ProtocolError("2xx search body is not a searchset bundle")
            if total is None:
                total = resource.total if isinstance(resource.total, int) else None
            entries.extend(e for e in resource.entry if e.is_match())
            next_url = resource.link_url("next")
            pages += 1
        if total is None:
            total = len(entries)
        return Bundle(type="searchset", total=total, entry=entries)

    def read(self, resource_type: str, resource_id: str) -> Any:
        if not ID_PATTERN.match(resource_id):
            raise ValueError(f"invalid resource id: {resource_id!r}")
        url = f"{self.endpoint.base_url}/{resource_type}/{quote(resource_id)}"
        response = self._request("GET", url)
        if response.status_code == 404:
            raise NotFound(resource_type, resource_id)
        if response.status_code < 200 or response.status_code >= 300:
            raise RemoteError(response.status_code, _maybe_outcome(response))
        resource, _ = _decode_body(response)
        returned_type = getattr(resource, "resource_type", None)
        if returned_type != resource_type:
            raise ProtocolError(
                f"asked for {resource_type}, got {returned_type or 'something else'}"
            )
        if resource.id != resource_id:
            raise ProtocolError(
                f"asked for {resource_type}/{resource_id}, got id {resource.id!r}"
            )
        return resource

    def create(self, resource: Any) -> Tuple[str, Any]:
        """POST {base}/{type}; returns the server-assigned id and the body.

        Validity is the caller's contract; anything the server still dislikes
        comes back as Rejected with the server's outcome attached.
        """
        resource_type = getattr(resource, "resource_type", None)
        if resource_type not in CLIENT_RESOURCE_TYPES:
            raise ValueError(f"unsupported create type: {resource_type}")
        if resource.id is not None:
            raise ValueError("resource.id must be absent on create")

        url = f"{self.endpoint.base_url}/{resource_type}"
        body = serialize_resource(resource).encode("utf-8")
        response = self._request("POST", url, body=body)
        status = response.status_code
        if 400 <= status < 500:
            raise Rejected(status, _maybe_outcome(response))
        if status >= 500:
            raise RemoteError(status, _maybe_outcome(response))
        if status != 201:
            raise ProtocolError(f"create answered HTTP {status}, expected 201")
        location = response.headers.get("Location") or response.headers.get(
            "Content-Location"
        )
        if not location:
            raise ProtocolError("201 without a Location header")
        assigned_id = parse_location_id(location, resource_type)
        if assigned_id is None:
            raise ProtocolError(f"unparseable Location header: {location!r}")
        returned: Any = None
        if response.content:
            try:
                returned, _ = _decode_body(response)
            except ProtocolError:
                returned = None
        return assigned_id, returned
