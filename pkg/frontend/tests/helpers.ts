import { App } from "../src/app.js";
import { BffClient, type FetchLike } from "../src/api.js";
import type { AppointmentRow, PatientRow } from "../src/types.js";

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

type Override = (req: RecordedRequest) => Promise<Response> | Response | null;

/** In-memory BFF double: answers the five endpoints, records every request,
 * and lets a test swap in failures or hangs per route. */
export class StubBff {
  patients: PatientRow[] = [];
  appointments: AppointmentRow[] = [];
  degraded = false;
  requests: RecordedRequest[] = [];
  override: Override | null = null;
  private nextId = 100;

  readonly fetch: FetchLike = async (input, init) => {
    const url = new URL(input);
    const request: RecordedRequest = {
      method: init?.method ?? "GET",
      path: url.pathname,
      body: init?.body ? JSON.parse(String(init.body)) : null,
    };
    this.requests.push(request);
    if (this.override) {
      const handled = await this.override(request);
      if (handled) return handled;
    }
    return this.defaultRoute(request);
  };

  posts(path: string): RecordedRequest[] {
    return this.requests.filter((r) => r.method === "POST" && r.path === path);
  }

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private defaultRoute(req: RecordedRequest): Response {
    if (req.method === "GET" && req.path === "/nav/patients") {
      return this.json(200, { patients: this.patients, degraded: this.degraded });
    }
    if (req.method === "GET" && req.path === "/nav/appointments") {
      return this.json(200, {
        appointments: this.appointments,
        degraded: this.degraded,
      });
    }
    if (req.method === "POST" && req.path === "/nav/patients") {
      const form = req.body as Record<string, string>;
      const row: PatientRow = {
        fhirId: String(this.nextId++),
        displayName: [form.family, form.given].filter(Boolean).join(", "),
        birthDate: form.birthDate,
        gender: form.gender,
      };
      this.patients.push(row);
      return this.json(201, { fhirId: row.fhirId });
    }
    if (req.method === "POST" && req.path === "/nav/appointments") {
      const form = req.body as Record<string, string>;
      const patient = this.patients.find((p) => p.fhirId === form.patientId);
      const row: AppointmentRow = {
        fhirId: String(this.nextId++),
        patientFhirId: form.patientId,
        patientDisplayName: patient?.displayName ?? `Patient/${form.patientId}`,
        specialty: form.specialty,
        start: form.start,
        end: form.end,
        status: "booked",
      };
      this.appointments.push(row);
      return this.json(201, { fhirId: row.fhirId });
    }
    return this.json(404, { error: { message: "no such route" } });
  }
}

export function networkFailure(): Promise<Response> {
  return Promise.reject(new TypeError("fetch failed"));
}

/** A response the test releases by hand; used for double-submit checks. */
export function hangingResponse(): { promise: Promise<Response>; release: () => void } {
  let release!: () => void;
  const promise = new Promise<Response>((resolve) => {
    release = () =>
      resolve(
        new Response(JSON.stringify({ fhirId: "900" }), {
          status: 201,
          headers: { "Content-Type": "application/json" },
        }),
      );
  });
  return { promise, release };
}

export async function mountApp(stub: StubBff): Promise<{ app: App; root: HTMLElement }> {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app") as HTMLElement;
  const app = new App(root, new BffClient("http://bff.test", stub.fetch));
  app.init();
  await app.settle();
  return { app, root };
}

export function click(node: Element | null): void {
  if (!node) throw new Error("clicked a missing element");
  (node as HTMLElement).click();
}

export function setValue(form: Element, name: string, value: string): void {
  const input = form.querySelector<HTMLInputElement>(`[name="${name}"]`);
  if (!input) throw new Error(`missing form field ${name}`);
  input.value = value;
}

export const TWO_PATIENTS: PatientRow[] = [
  { fhirId: "1", displayName: "Silva, Ana", birthDate: "1990-01-02", gender: "female" },
  { fhirId: "2", displayName: "Souza, Bruno", birthDate: "1985-03-04", gender: "male" },
];
