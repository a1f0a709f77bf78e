"""Lead-210 age-depth modelling: classical CRS and a Bayesian constant-supply model."""

__version__ = "0.1.0"
