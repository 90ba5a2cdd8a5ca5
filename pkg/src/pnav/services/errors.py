"""Errors shared by the microservice cores, and their HTTP mapping.

Every REST error leaving a service is an OperationOutcome; the status is
400 for local validation, 404 for misses, 502 when the upstream let us down.
"""

from typing import List, Optional, Sequence

from ..fhir import OperationOutcome, OperationOutcomeIssue, Violation


class ServiceError(Exception):
    status = 500
    code = "exception"

    def to_outcome(self) -> OperationOutcome:
        return OperationOutcome(
            issue=[
                OperationOutcomeIssue(
                    severity="error", code=self.code, diagnostics=str(self)
                )
            ]
        )


class ValidationFailed(ServiceError):
    status = 400
    code = "invariant"

    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in violations))

    def to_outcome(self) -> OperationOutcome:
        return OperationOutcome(
            issue=[
                OperationOutcomeIssue(
                    severity="error", code=self.code, diagnostics=str(v)
                )
                for v in self.violations
            ]
        )


class RecordNotFound(ServiceError):
    status = 404
    code = "not-found"

    def __init__(self, resource_type: str, fhir_id: str):
        self.resource_type = resource_type
        self.fhir_id = fhir_id
        super().__init__(f"{resource_type}/{fhir_id} not found")


class PatientNotFound(ServiceError):
    """Referential check failed: the booking names a patient nobody knows."""

    status = 404
    code = "not-found"

    def __init__(self, fhir_id: str):
        self.fhir_id = fhir_id
        super().__init__(f"patientId: patient not found ({fhir_id})")


class UpstreamRejected(ServiceError):
    status = 502
    code = "processing"

    def __init__(self, http_status: int, outcome: Optional[OperationOutcome] = None):
        self.http_status = http_status
        self.outcome = outcome
        super().__init__(f"upstream rejected the request (HTTP {http_status})")

    def to_outcome(self) -> OperationOutcome:
        issues: List[OperationOutcomeIssue] = [
            OperationOutcomeIssue(
                severity="error", code=self.code, diagnostics=str(self)
            )
        ]
        if self.outcome is not None:
            issues.extend(self.outcome.issue)
        return OperationOutcome(issue=issues)


class UpstreamUnavailable(ServiceError):
    status = 502
    code = "transport"

    def __init__(self, detail: str = "upstream FHIR server is unreachable"):
        super().__init__(detail)
