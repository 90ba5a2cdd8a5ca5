/** Shapes exchanged with the nav-bff JSON API. */

export interface PatientRow {
  fhirId: string;
  displayName: string;
  birthDate?: string;
  gender?: string;
}

export interface AppointmentRow {
  fhirId: string;
  patientFhirId?: string;
  patientDisplayName: string;
  specialty?: string;
  start?: string;
  end?: string;
  status?: string;
}

export interface PatientsPayload {
  patients: PatientRow[];
  degraded: boolean;
}

export interface AppointmentsPayload {
  appointments: AppointmentRow[];
  degraded: boolean;
}

export interface RegistrationForm {
  given: string;
  family: string;
  birthDate: string;
  gender: string;
}

export interface BookingForm {
  patientId: string;
  specialty: string;
  start: string;
  end: string;
}

/** Field-attributed error, either produced client-side or mapped from the BFF. */
export interface FormError {
  message: string;
  fields: Record<string, string>;
  retriable: boolean;
}
