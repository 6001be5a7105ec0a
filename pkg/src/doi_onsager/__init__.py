"""Doi-Onsager kinetics on the sphere and its small-Deborah Ericksen-Leslie limit."""

__version__ = "0.1.0"
