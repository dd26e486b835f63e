"""Exact k-dependence and half-dependence computations on kings graphs."""
