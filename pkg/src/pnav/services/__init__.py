"""Patient and Appointment microservices plus the navigator BFF."""
