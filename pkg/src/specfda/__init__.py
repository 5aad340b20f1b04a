"""Spectral regularization estimators for the mean and covariance of sparsely observed curves."""
