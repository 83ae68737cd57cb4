"""Open-system dynamics of a particle in a symmetric double well."""

__version__ = "0.1.0"
