"""Hilbert-Poincare complexes over loop algebras: validation, signatures and K1 invariants."""
