"""Exact engine for a generators-and-relations presentation of the positive elliptic Hall algebra."""

__version__ = "0.1.0"
