"""Entropy, Pinsker factors and duality for linear flows over finite prime fields."""

__version__ = "0.1.0"
