"""Scripted stand-ins for the connector and the patient directory.

They count every call, which is how the chassis-separation probes assert
that e.g. a repository hit makes zero upstream requests.
"""

from typing import Any, Dict, List, Optional, Tuple

from pnav.client import NotFound, Unreachable
from pnav.fhir import Bundle, BundleEntry, EntrySearch
from pnav.services.errors import UpstreamUnavailable


class FakeConnector:
    """In-memory double for FhirClient with switchable failure modes."""

    def __init__(self):
        self.resources: Dict[str, Dict[str, Any]] = {"Patient": {}, "Appointment": {}}
        self.search_results: Optional[List[Any]] = None
        self.next_id = 1
        self.down = False
        self.reject_with: Optional[Exception] = None
        self.search_calls: List[Tuple[str, list]] = []
        self.read_calls: List[Tuple[str, str]] = []
        self.create_calls: List[Any] = []

    @property
    def total_calls(self) -> int:
        return len(self.search_calls) + len(self.read_calls) + len(self.create_calls)

    def _check_down(self):
        if self.down:
            raise Unreachable("scripted outage")

    def search(self, resource_type, params=()):
        self.search_calls.append((resource_type, list(params)))
        self._check_down()
        if self.search_results is not None:
            matches = list(self.search_results)
        else:
            matches = list(self.resources[resource_type].values())
        return Bundle(
            type="searchset",
            total=len(matches),
            entry=[
                BundleEntry(resource=m, search=EntrySearch(mode="match"))
                for m in matches
            ],
        )

    def read(self, resource_type, resource_id):
        self.read_calls.append((resource_type, resource_id))
        self._check_down()
        resource = self.resources[resource_type].get(resource_id)
        if resource is None:
            raise NotFound(resource_type, resource_id)
        return resource

    def create(self, resource):
        self.create_calls.append(resource)
        self._check_down()
        if self.reject_with is not None:
            raise self.reject_with
        assigned = str(self.next_id)
        self.next_id += 1
        return assigned, None


class FakePatientDirectory:
    """Double for the service-to-service referential check."""

    def __init__(self):
        self.views: Dict[str, Dict[str, Any]] = {}
        self.down = False
        self.calls: List[str] = []

    def get_patient(self, fhir_id):
        self.calls.append(fhir_id)
        if self.down:
            raise UpstreamUnavailable("patient service unreachable (scripted)")
        return self.views.get(fhir_id)
