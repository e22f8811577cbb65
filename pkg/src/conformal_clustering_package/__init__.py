"""Split conformal clustering with stochastic labels."""

__version__ = "0.1.0"
