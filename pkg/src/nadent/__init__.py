"""Exact entropy counters and experiments for nonautonomous dynamics on
finite metric spaces.

The package computes orbit-complexity counts (minimal subcovers of joined
preimage covers, maximum separated and minimum spanning sets) with exact
rational arithmetic, builds the word/depth example systems and their
measure embeddings, and ships reproducible experiment runners behind a
CLI. Hot kernels live in a compiled extension with a pure-Python fallback
selected at import (see ``nadent._kernels``).
"""

__version__ = "0.1.0"

from ._kernels import backend_name

__all__ = ["__version__", "backend_name"]
