"""potdep: peaks-over-threshold inference for serially dependent series."""

__version__ = "0.1.0"
__all__ = ["__version__"]
