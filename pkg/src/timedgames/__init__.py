"""Solver and property workbench for expected-time games on probabilistic
timed automata, built on the boundary region graph."""

__version__ = "0.1.0"
