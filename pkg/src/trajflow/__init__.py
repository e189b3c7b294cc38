"""trajflow: a dataflow graph engine for molecular dynamics trajectory analysis."""

__version__ = "0.1.0"
