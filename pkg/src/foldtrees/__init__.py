"""Exact computations with P-systems, amalgams, Bass-Serre trees and fold maps."""

__version__ = "0.1.0"
