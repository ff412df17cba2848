"""Lightweight concrete syntax trees for C, C++, CUDA, and Fortran.

The parsers are strictly left-to-right with panic-mode recovery: a syntax
error never changes how the text before it was parsed, and unparsable
regions become ERROR nodes instead of aborting. The trees serve token
labeling and structural metrics, not compilation, so the grammars cover the
common shapes of numerical kernels rather than the full languages.
"""

from forge.syntax.tree import Node, iter_leaves, iter_nodes
from forge.syntax.parse import is_parse_failure, parse_source, supported_languages

__all__ = [
    "Node",
    "is_parse_failure",
    "iter_leaves",
    "iter_nodes",
    "parse_source",
    "supported_languages",
]
