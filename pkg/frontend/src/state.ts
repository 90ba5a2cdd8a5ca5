import type { AppointmentRow, FormError, PatientRow } from "./types.js";

export type Tab = "patients" | "appointments";
export type ActiveForm = "none" | "registration" | "booking";

export interface UiState {
  tab: Tab;
  patients: PatientRow[];
  appointments: AppointmentRow[];
  activeForm: ActiveForm;
  /** A mutation is in flight; submit controls must be disabled. */
  pending: boolean;
  /** Mirror of the BFF's degraded flag; drives the banner, nothing else. */
  degraded: boolean;
  /** Last submit failure, field-attributed; cleared when a form opens. */
  lastError: FormError | null;
  /** Per-list fetch failures; each renders an inline retry affordance. */
  patientsError: string | null;
  appointmentsError: string | null;
  notice: string | null;
}

export function initialState(): UiState {
  return {
    tab: "patients",
    patients: [],
    appointments: [],
    activeForm: "none",
    pending: false,
    degraded: false,
    lastError: null,
    patientsError: null,
    appointmentsError: null,
    notice: null,
  };
}

type Listener = (state: UiState) => void;

/**
 * Single store for the whole page. Transitions preserve the invariants the
 * rest of the UI relies on: at most one form open, and a pending request
 * blocks every further submit until it settles.
 */
export class Store {
  private state: UiState = initialState();
  private listeners: Listener[] = [];

  get(): UiState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private commit(next: Partial<UiState>): void {
    this.state = { ...this.state, ...next };
    for (const listener of this.listeners) listener(this.state);
  }

  switchTab(tab: Tab): void {
    this.commit({ tab });
  }

  showPatients(patients: PatientRow[], degraded: boolean): void {
    this.commit({ patients, degraded, patientsError: null });
  }

  showAppointments(appointments: AppointmentRow[], degraded: boolean): void {
    this.commit({ appointments, degraded, appointmentsError: null });
  }

  patientsLoadFailed(message: string): void {
    this.commit({ patientsError: message });
  }

  appointmentsLoadFailed(message: string): void {
    this.commit({ appointmentsError: message });
  }

  openForm(form: Exclude<ActiveForm, "none">): void {
    if (this.state.pending) return; // nothing opens mid-submit
    this.commit({ activeForm: form, lastError: null, notice: null });
  }

  closeForm(): void {
    this.commit({ activeForm: "none", lastError: null });
  }

  /** Returns false when a request is already pending (double-submit guard). */
  beginSubmit(): boolean {
    if (this.state.pending) return false;
    this.commit({ pending: true, lastError: null });
    return true;
  }

  submitSucceeded(notice: string): void {
    this.commit({ pending: false, activeForm: "none", notice });
  }

  submitFailed(error: FormError): void {
    this.commit({ pending: false, lastError: error });
  }
}
