"""Frequency-tuned universal adversarial perturbations on toy classifiers."""

__version__ = "0.1.0"
