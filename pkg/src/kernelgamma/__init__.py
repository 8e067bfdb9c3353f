"""Analytical RBF kernel width selection with KOS and SVM classifiers."""

__version__ = "0.1.0"
