"""
Utilities - Common Helper Functions

Components:
- logging.py: Centralized logging configuration, run-id context
- csv_io.py: Trajectory and census CSV writers / readers

All utilities are stateless.
"""
