import { BffClient, BffRequestError, BffUnreachable } from "./api.js";
import {
  buildBookingForm,
  buildRegistrationForm,
  buildShell,
  decorateFormErrors,
  renderAppointmentList,
  renderPatientList,
  setSubmitDisabled,
} from "./render.js";
import { Store, type ActiveForm } from "./state.js";
import type { BookingForm, FormError, RegistrationForm } from "./types.js";

function value(form: HTMLFormElement, name: string): string {
  const input = form.querySelector<HTMLInputElement | HTMLSelectElement>(
    `[name="${name}"]`,
  );
  return (input?.value ?? "").trim();
}

function checkRegistration(form: RegistrationForm): Record<string, string> {
  const fields: Record<string, string> = {};
  if (!form.given && !form.family) {
    fields.given = "enter a given name or a surname";
  }
  if (!form.birthDate || Number.isNaN(Date.parse(form.birthDate))) {
    fields.birthDate = "pick a valid date";
  }
  if (!["female", "male", "other", "unknown"].includes(form.gender)) {
    fields.gender = "pick a gender";
  }
  return fields;
}

function toInstant(local: string): string | null {
  const parsed = new Date(local);
  return Number.isNaN(parsed.getTime()) ? null : parsed.toISOString();
}

function checkBooking(form: BookingForm): Record<string, string> {
  const fields: Record<string, string> = {};
  if (!form.patientId) fields.patientId = "choose a patient";
  if (!form.start) fields.start = "pick a start time";
  if (!form.end) {
    fields.end = "pick an end time";
  } else if (form.start && form.end <= form.start) {
    fields.end = "must be after start";
  }
  return fields;
}

export class App {
  readonly store = new Store();
  private readonly doc: Document;
  private inflight = new Set<Promise<unknown>>();
  private mountedForm: ActiveForm = "none";
  private formElement: HTMLFormElement | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: BffClient,
  ) {
    this.doc = root.ownerDocument;
  }

  init(): void {
    buildShell(this.root);
    this.byId("tab-patients").addEventListener("click", () =>
      this.store.switchTab("patients"),
    );
    this.byId("tab-appointments").addEventListener("click", () => {
      this.store.switchTab("appointments");
      this.track(this.refreshAppointments());
    });
    this.byId("open-registration").addEventListener("click", () =>
      this.store.openForm("registration"),
    );
    this.byId("open-booking").addEventListener("click", () =>
      this.store.openForm("booking"),
    );
    this.store.subscribe(() => this.render());
    this.render();
    this.track(this.refreshPatients());
    this.track(this.refreshAppointments());
  }

  /** Wait for every in-flight request chain; tests use this to settle the DOM. */
  async settle(): Promise<void> {
    while (this.inflight.size > 0) {
      await Promise.allSettled(Array.from(this.inflight));
    }
  }

  private track<T>(promise: Promise<T>): Promise<T> {
    this.inflight.add(promise);
    promise.finally(() => this.inflight.delete(promise));
    return promise;
  }

  private byId(id: string): HTMLElement {
    const node = this.doc.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  }

  // -- data ------------------------------------------------------------------

  async refreshPatients(): Promise<void> {
    try {
      const payload = await this.api.fetchPatients();
      this.store.showPatients(payload.patients ?? [], payload.degraded === true);
    } catch {
      this.store.patientsLoadFailed("Could not load patients.");
    }
  }

  async refreshAppointments(): Promise<void> {
    try {
      const payload = await this.api.fetchAppointments();
      this.store.showAppointments(
        payload.appointments ?? [],
        payload.degraded === true,
      );
    } catch {
      this.store.appointmentsLoadFailed("Could not load appointments.");
    }
  }

  // -- submits -----------------------------------------------------------------

  private submitRegistration(form: HTMLFormElement): void {
    const values: RegistrationForm = {
      given: value(form, "given"),
      family: value(form, "family"),
      birthDate: value(form, "birthDate"),
      gender: value(form, "gender"),
    };
    const fields = checkRegistration(values);
    if (Object.keys(fields).length > 0) {
      this.store.submitFailed({ message: "fix the highlighted fields", fields, retriable: false });
      return;
    }
    if (!this.store.beginSubmit()) return; // a request is already pending
    this.track(
      (async () => {
        try {
          await this.api.registerPatient(values);
          this.store.submitSucceeded("Patient registered.");
          await this.refreshPatients();
        } catch (error) {
          this.store.submitFailed(this.asFormError(error));
        }
      })(),
    );
  }

  private submitBooking(form: HTMLFormElement): void {
    const raw: BookingForm = {
      patientId: value(form, "patientId"),
      specialty: value(form, "specialty"),
      start: value(form, "start"),
      end: value(form, "end"),
    };
    const fields = checkBooking(raw);
    const start = raw.start ? toInstant(raw.start) : null;
    const end = raw.end ? toInstant(raw.end) : null;
    if (raw.start && !start) fields.start = "not a valid time";
    if (raw.end && !end) fields.end = fields.end ?? "not a valid time";
    if (Object.keys(fields).length > 0) {
      this.store.submitFailed({ message: "fix the highlighted fields", fields, retriable: false });
      return;
    }
    if (!this.store.beginSubmit()) return;
    this.track(
      (async () => {
        try {
          await this.api.bookAppointment({
            patientId: raw.patientId,
            specialty: raw.specialty,
            start: start!,
            end: end!,
          });
          this.store.submitSucceeded("Appointment booked.");
          await this.refreshAppointments();
        } catch (error) {
          this.store.submitFailed(this.asFormError(error));
        }
      })(),
    );
  }

  private asFormError(error: unknown): FormError {
    if (error instanceof BffRequestError) return error.detail;
    if (error instanceof BffUnreachable) {
      return { message: error.message, fields: {}, retriable: true };
    }
    return { message: String(error), fields: {}, retriable: false };
  }

  // -- rendering ----------------------------------------------------------------

  private render(): void {
    const state = this.store.get();
    this.byId("patients-panel").hidden = state.tab !== "patients";
    this.byId("appointments-panel").hidden = state.tab !== "appointments";
    this.byId("tab-patients").classList.toggle("active", state.tab === "patients");
    this.byId("tab-appointments").classList.toggle(
      "active",
      state.tab === "appointments",
    );
    this.byId("degraded-banner").hidden = !state.degraded;

    renderPatientList(this.doc, this.byId("patients-list"), state, () =>
      this.track(this.refreshPatients()),
    );
    renderAppointmentList(this.doc, this.byId("appointments-list"), state, () =>
      this.track(this.refreshAppointments()),
    );

    const notice = this.byId("notice");
    notice.hidden = !state.notice;
    notice.textContent = state.notice ?? "";

    this.renderForms(state.activeForm);
    const toast = this.byId("toast");
    const toastMessage =
      state.lastError && Object.keys(state.lastError.fields).length === 0
        ? state.lastError.message
        : null;
    toast.hidden = !toastMessage;
    toast.textContent = toastMessage ?? "";
    if (this.formElement) {
      setSubmitDisabled(this.formElement, state.pending);
      decorateFormErrors(
        this.doc,
        this.formElement,
        state.lastError?.fields ?? {},
        state.lastError && Object.keys(state.lastError.fields).length > 0
          ? state.lastError.message
          : null,
      );
    }
  }

  private renderForms(active: ActiveForm): void {
    if (active === this.mountedForm) return; // keep typed values intact
    this.byId("registration-slot").textContent = "";
    this.byId("booking-slot").textContent = "";
    this.formElement = null;
    if (active === "registration") {
      this.formElement = buildRegistrationForm(
        this.doc,
        (form) => this.submitRegistration(form),
        () => this.store.closeForm(),
      );
      this.byId("registration-slot").appendChild(this.formElement);
    } else if (active === "booking") {
      this.formElement = buildBookingForm(
        this.doc,
        this.store.get().patients,
        (form) => this.submitBooking(form),
        () => this.store.closeForm(),
      );
      this.byId("booking-slot").appendChild(this.formElement);
    }
    this.mountedForm = active;
  }
}

declare global {
  interface Window {
    PNAV_BFF_BASE?: string;
  }
}

export function boot(root: HTMLElement, baseUrl?: string): App {
  const base = baseUrl ?? window.PNAV_BFF_BASE ?? "http://127.0.0.1:8093";
  const app = new App(root, new BffClient(base));
  app.init();
  return app;
}
