"""Solver, verification and command line tests."""
