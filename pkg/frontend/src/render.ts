import type { UiState } from "./state.js";
import type { AppointmentRow, PatientRow } from "./types.js";

/** DOM builders. Lists re-render from state; forms are built once when they
 * open so whatever the navigator typed survives error round-trips. */

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

export function buildShell(root: HTMLElement): void {
  root.innerHTML = `
    <header>
      <h1>Patient Navigation</h1>
      <div id="degraded-banner" class="banner" hidden>
        Records server unreachable; showing the last cached records.
      </div>
      <div id="toast" class="toast" hidden></div>
      <div id="notice" class="notice" hidden></div>
    </header>
    <nav>
      <button id="tab-patients" class="tab" type="button">Patients</button>
      <button id="tab-appointments" class="tab" type="button">Appointments</button>
    </nav>
    <main>
      <section id="patients-panel">
        <div class="panel-head">
          <button id="open-registration" type="button">Register patient</button>
        </div>
        <div id="patients-list"></div>
        <div id="registration-slot"></div>
      </section>
      <section id="appointments-panel" hidden>
        <div class="panel-head">
          <button id="open-booking" type="button">New appointment</button>
        </div>
        <div id="appointments-list"></div>
        <div id="booking-slot"></div>
      </section>
    </main>
  `;
}

function formatWhen(row: AppointmentRow): string {
  const tidy = (value?: string) => (value ?? "").replace("T", " ").slice(0, 16);
  if (!row.start) return "";
  return row.end ? `${tidy(row.start)} – ${tidy(row.end)}` : tidy(row.start);
}

export function renderPatientList(
  doc: Document,
  container: HTMLElement,
  state: UiState,
  onRetry: () => void,
): void {
  container.textContent = "";
  if (state.patientsError) {
    const box = el(doc, "div", { class: "load-error" }, state.patientsError + " ");
    const retry = el(doc, "button", { class: "retry", type: "button" }, "Retry");
    retry.addEventListener("click", onRetry);
    box.appendChild(retry);
    container.appendChild(box);
    return;
  }
  if (state.patients.length === 0) {
    container.appendChild(
      el(doc, "p", { class: "empty-state" }, "No patients registered yet."),
    );
    return;
  }
  const table = el(doc, "table", { class: "patients-table" });
  const head = el(doc, "tr");
  for (const title of ["Name", "Birth date", "Gender"]) {
    head.appendChild(el(doc, "th", {}, title));
  }
  table.appendChild(head);
  for (const row of state.patients) {
    const tr = el(doc, "tr", { "data-fhir-id": row.fhirId });
    tr.appendChild(el(doc, "td", { class: "name" }, row.displayName));
    tr.appendChild(el(doc, "td", { class: "birth" }, row.birthDate ?? ""));
    tr.appendChild(el(doc, "td", { class: "gender" }, row.gender ?? ""));
    table.appendChild(tr);
  }
  container.appendChild(table);
}

export function renderAppointmentList(
  doc: Document,
  container: HTMLElement,
  state: UiState,
  onRetry: () => void,
): void {
  container.textContent = "";
  if (state.appointmentsError) {
    const box = el(doc, "div", { class: "load-error" }, state.appointmentsError + " ");
    const retry = el(doc, "button", { class: "retry", type: "button" }, "Retry");
    retry.addEventListener("click", onRetry);
    box.appendChild(retry);
    container.appendChild(box);
    return;
  }
  if (state.appointments.length === 0) {
    container.appendChild(
      el(doc, "p", { class: "empty-state" }, "No appointments scheduled yet."),
    );
    return;
  }
  const table = el(doc, "table", { class: "appointments-table" });
  const head = el(doc, "tr");
  for (const title of ["Patient", "Specialty", "When", "Status"]) {
    head.appendChild(el(doc, "th", {}, title));
  }
  table.appendChild(head);
  for (const row of state.appointments) {
    const tr = el(doc, "tr", { "data-fhir-id": row.fhirId });
    tr.appendChild(el(doc, "td", { class: "patient" }, row.patientDisplayName));
    tr.appendChild(el(doc, "td", { class: "specialty" }, row.specialty ?? ""));
    tr.appendChild(el(doc, "td", { class: "when" }, formatWhen(row)));
    const status = row.status ?? "";
    const badge = el(
      doc,
      "span",
      { class: `badge${status === "booked" ? " booked" : ""}`, "data-status": status },
      status,
    );
    const cell = el(doc, "td", { class: "status" });
    cell.appendChild(badge);
    tr.appendChild(cell);
    table.appendChild(tr);
  }
  container.appendChild(table);
}

const GENDERS = ["female", "male", "other", "unknown"];

export function buildRegistrationForm(
  doc: Document,
  onSubmit: (form: HTMLFormElement) => void,
  onCancel: () => void,
): HTMLFormElement {
  const form = el(doc, "form", { id: "registration-form" });
  form.innerHTML = `
    <h2>New patient registration</h2>
    <label>Given name <input name="given" type="text"></label>
    <label>Surname <input name="family" type="text"></label>
    <label>Date of birth <input name="birthDate" type="date"></label>
    <label>Gender
      <select name="gender">
        ${GENDERS.map((g) => `<option value="${g}">${g}</option>`).join("")}
      </select>
    </label>
    <p class="form-error" hidden></p>
    <button type="submit">Register</button>
    <button type="button" class="cancel">Cancel</button>
  `;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    onSubmit(form);
  });
  form.querySelector(".cancel")!.addEventListener("click", onCancel);
  return form;
}

export function buildBookingForm(
  doc: Document,
  patients: PatientRow[],
  onSubmit: (form: HTMLFormElement) => void,
  onCancel: () => void,
): HTMLFormElement {
  const form = el(doc, "form", { id: "booking-form" });
  const options = patients
    .map((p) => `<option value="${p.fhirId}">${p.displayName || p.fhirId}</option>`)
    .join("");
  form.innerHTML = `
    <h2>New appointment</h2>
    <label>Patient
      <select name="patientId">
        <option value="">-- choose --</option>
        ${options}
      </select>
    </label>
    <label>Specialty <input name="specialty" type="text"></label>
    <label>Start <input name="start" type="datetime-local"></label>
    <label>End <input name="end" type="datetime-local"></label>
    <p class="form-error" hidden></p>
    <button type="submit">Book</button>
    <button type="button" class="cancel">Cancel</button>
  `;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    onSubmit(form);
  });
  form.querySelector(".cancel")!.addEventListener("click", onCancel);
  return form;
}

/** Field errors sit next to their inputs; everything else is cleared first. */
export function decorateFormErrors(
  doc: Document,
  form: HTMLFormElement,
  fields: Record<string, string>,
  message: string | null,
): void {
  for (const stale of Array.from(form.querySelectorAll(".field-error"))) {
    stale.remove();
  }
  for (const input of Array.from(form.querySelectorAll("input, select"))) {
    input.classList.remove("invalid");
  }
  const banner = form.querySelector<HTMLElement>(".form-error");
  if (banner) {
    banner.hidden = !message;
    banner.textContent = message ?? "";
  }
  for (const [field, text] of Object.entries(fields)) {
    const input = form.querySelector<HTMLElement>(`[name="${field}"]`);
    if (!input) continue;
    input.classList.add("invalid");
    const note = el(doc, "span", { class: "field-error", "data-field": field }, text);
    input.insertAdjacentElement("afterend", note);
  }
}

export function setSubmitDisabled(form: HTMLFormElement, disabled: boolean): void {
  const submit = form.querySelector<HTMLButtonElement>('button[type="submit"]');
  if (submit) submit.disabled = disabled;
}
