"""Dual-arm impedance-control teleoperation simulator."""

__version__ = "0.1.0"
