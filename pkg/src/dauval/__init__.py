"""dauval: DAU-driven Monte Carlo discounted-cash-flow valuation toolkit."""

__version__ = "0.1.0"
