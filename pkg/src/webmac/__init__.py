"""Clarify, expand, and execute Gherkin web test scenarios."""

__version__ = "0.1.0"
