"""Covariate selection for causal inference."""
