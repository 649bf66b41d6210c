"""Extremal density matrices of qudit Hamiltonians."""
