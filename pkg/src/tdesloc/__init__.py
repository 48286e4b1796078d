"""Supervisor localization for timed discrete-event systems."""
