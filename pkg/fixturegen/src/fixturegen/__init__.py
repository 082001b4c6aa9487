"""Synthetic scenes, pseudo detector outputs, and brute-force oracles.

Everything here is an independent implementation of the shared file
contracts (tensor files, gt json, run-length masks): no code is imported
from the consumer package, so round-trip tests exercise the formats for
real.
"""

__version__ = "0.1.0"
