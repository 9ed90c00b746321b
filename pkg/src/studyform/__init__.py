"""Workbench for LLM-assisted systematic-review data extraction with
mandatory human verification of every recorded value."""

__version__ = "0.1.0"
