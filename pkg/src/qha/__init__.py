"""Numerical workbench for quantum harmonic analysis on phase space."""
