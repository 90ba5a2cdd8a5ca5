import type {
  AppointmentsPayload,
  BookingForm,
  FormError,
  PatientsPayload,
  RegistrationForm,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Raised for any reachable-but-unhappy BFF reply; carries field attribution. */
export class BffRequestError extends Error {
  constructor(
    readonly status: number,
    readonly detail: FormError,
  ) {
    super(detail.message);
  }
}

/** Raised when the BFF could not be reached at all. */
export class BffUnreachable extends Error {
  constructor(cause: unknown) {
    super(`the navigator backend is unreachable (${String(cause)})`);
  }
}

function errorFromBody(status: number, body: unknown): BffRequestError {
  let message = `request failed (HTTP ${status})`;
  let fields: Record<string, string> = {};
  let retriable = status >= 502;
  if (body && typeof body === "object" && "error" in body) {
    const err = (body as { error: Record<string, unknown> }).error;
    if (typeof err.message === "string") message = err.message;
    if (err.fields && typeof err.fields === "object") {
      fields = err.fields as Record<string, string>;
    }
    if (typeof err.retriable === "boolean") retriable = err.retriable;
  }
  return new BffRequestError(status, { message, fields, retriable });
}

export class BffClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new BffUnreachable(cause);
    }
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      payload = null;
    }
    if (!response.ok) {
      throw errorFromBody(response.status, payload);
    }
    return payload as T;
  }

  fetchPatients(name?: string): Promise<PatientsPayload> {
    const query = name ? `?name=${encodeURIComponent(name)}` : "";
    return this.request<PatientsPayload>("GET", `/nav/patients${query}`);
  }

  fetchAppointments(status?: string): Promise<AppointmentsPayload> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.request<AppointmentsPayload>("GET", `/nav/appointments${query}`);
  }

  registerPatient(form: RegistrationForm): Promise<unknown> {
    return this.request("POST", "/nav/patients", form);
  }

  bookAppointment(form: BookingForm): Promise<unknown> {
    return this.request("POST", "/nav/appointments", form);
  }
}
