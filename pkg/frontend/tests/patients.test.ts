import { beforeEach, describe, expect, it } from "vitest";

import {
  StubBff,
  TWO_PATIENTS,
  click,
  mountApp,
  networkFailure,
} from "./helpers.js";

describe("patient list", () => {
  let stub: StubBff;

  beforeEach(() => {
    stub = new StubBff();
  });

  it("renders one row per patient in the BFF payload, nothing fabricated", async () => {
    stub.patients = [...TWO_PATIENTS];
    const { root } = await mountApp(stub);
    const rows = root.querySelectorAll("#patients-list tr[data-fhir-id]");
    expect(rows.length).toBe(stub.patients.length);
    // snapshot-compare DOM data attributes against the stubbed payload
    for (const patient of stub.patients) {
      const row = root.querySelector(
        `#patients-list tr[data-fhir-id="${patient.fhirId}"]`,
      );
      expect(row, `row for ${patient.fhirId}`).toBeTruthy();
      expect(row!.querySelector(".name")!.textContent).toBe(patient.displayName);
      expect(row!.querySelector(".birth")!.textContent).toBe(patient.birthDate);
      expect(row!.querySelector(".gender")!.textContent).toBe(patient.gender);
    }
  });

  it("shows an empty state when there are no patients", async () => {
    const { root } = await mountApp(stub);
    expect(root.querySelector("#patients-list .empty-state")).toBeTruthy();
    expect(root.querySelectorAll("#patients-list tr[data-fhir-id]").length).toBe(0);
  });

  it("shows the degraded banner exactly when the BFF reports degraded", async () => {
    stub.patients = [...TWO_PATIENTS];
    stub.degraded = true;
    const { root, app } = await mountApp(stub);
    const banner = root.querySelector<HTMLElement>("#degraded-banner")!;
    expect(banner.hidden).toBe(false);

    stub.degraded = false;
    await app.refreshPatients();
    expect(banner.hidden).toBe(true);
  });

  it("offers an inline retry when the fetch fails, and recovers", async () => {
    stub.override = (req) =>
      req.method === "GET" && req.path === "/nav/patients"
        ? (networkFailure() as Promise<Response>)
        : null;
    const { root, app } = await mountApp(stub);
    const retry = root.querySelector("#patients-list .load-error .retry");
    expect(retry).toBeTruthy();

    stub.override = null;
    stub.patients = [...TWO_PATIENTS];
    click(retry);
    await app.settle();
    expect(root.querySelectorAll("#patients-list tr[data-fhir-id]").length).toBe(2);
  });

  it("switches between the patients and appointments tabs", async () => {
    stub.appointments = [
      {
        fhirId: "10",
        patientDisplayName: "Silva, Ana",
        specialty: "oncology",
        start: "2026-09-01T09:00:00+00:00",
        end: "2026-09-01T09:30:00+00:00",
        status: "booked",
      },
    ];
    const { root, app } = await mountApp(stub);
    expect(root.querySelector<HTMLElement>("#appointments-panel")!.hidden).toBe(true);
    click(root.querySelector("#tab-appointments"));
    await app.settle();
    expect(root.querySelector<HTMLElement>("#appointments-panel")!.hidden).toBe(false);
    expect(root.querySelector<HTMLElement>("#patients-panel")!.hidden).toBe(true);
  });
});
