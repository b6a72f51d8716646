"""carbonrun: run a command, meter its energy, report the CO2 cost."""

__version__ = "0.1.0"
