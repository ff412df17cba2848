"""Syntax tree node shared by all language parsers."""

from __future__ import annotations

from typing import Iterator


class Node:
    """One CST node covering [start, end) character offsets.

    Leaves carry no children; "anonymous" leaves (operators, keywords) use
    their literal text as the kind, named leaves use a kind like
    ``identifier`` or ``number_literal``.
    """

    __slots__ = ("kind", "start", "end", "children")

    def __init__(self, kind: str, start: int, end: int, children=None):
        self.kind = kind
        self.start = start
        self.end = end
        self.children: list[Node] = children if children is not None else []

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def text(self, source: str) -> str:
        return source[self.start : self.end]

    def __repr__(self):
        return f"Node({self.kind!r}, {self.start}, {self.end}, {len(self.children)} kids)"

    def sexp(self, source: str | None = None) -> str:
        """Debug rendering."""
        if self.is_leaf:
            if source is not None:
                return f"({self.kind} {self.text(source)!r})"
            return f"({self.kind})"
        inner = " ".join(c.sexp(source) for c in self.children)
        return f"({self.kind} {inner})"


def iter_nodes(root: Node) -> Iterator[Node]:
    """Every node, depth-first, parents before children."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def iter_leaves(root: Node) -> Iterator[Node]:
    for node in iter_nodes(root):
        if node.is_leaf:
            yield node
