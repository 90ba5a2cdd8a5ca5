"""Patient navigation microservice suite.

A registration-and-scheduling stack speaking FHIR R4: resource model and
codec, a REST client, an in-process sandbox server, Patient and Appointment
microservices, a navigator backend-for-frontend, and a harness that runs the
whole suite and replays scripted scenarios.
"""

__version__ = "0.1.0"
