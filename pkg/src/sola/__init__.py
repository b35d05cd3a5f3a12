"""sola: self-hostable coordination service for pop-up communities."""

__version__ = "0.1.0"
