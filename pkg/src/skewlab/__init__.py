"""Workbench for bounded cocycles over lattice actions: exact odometer
measure algebra, Rokhlin-tower constructions with essential-value
certificates, a sequential topological engine on shift spaces, and a
random-walk / decomposition laboratory."""

__version__ = "0.1.0"
