"""drivelab: a desk-scale naturalistic-driving telemetry rig.

Simulated vehicle/driver devices feed a recorder agent whose chunked
journals sync to an ingestion service -- live while connected, deferred
through dead zones -- with consent gating, validation, and encryption at
rest. A CLI (and an optional web console) drives the whole stack.
"""

__version__ = "0.1.0"
