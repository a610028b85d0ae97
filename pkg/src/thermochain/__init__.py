"""thermochain: exact desk-scale numerics for finite-temperature spin chains."""

__version__ = "0.1.0"
