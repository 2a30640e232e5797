"""Trace-driven simulator of a hybrid SRAM/STT-RAM L1 data cache under intermittent power."""

__version__ = "0.1.0"
