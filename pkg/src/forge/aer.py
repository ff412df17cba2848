"""Syntax-category labeling of tokenized source (entity recognition).

Each whole word receives a category from the parse tree; all of a word's
subword tokens carry ids derived from that category: the first token gets
the odd category id, continuation tokens get category id + 1, and 0 marks
words outside every category. When categories overlap the deepest tree node
decides. Unparsable regions label as all-O rather than failing, so a syntax
error near the end of a file never disturbs labels before it.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from importlib import resources

from forge.documents import AerLabeledDocument, TokenizedDocument
from forge.errors import DataError, FormatError
from forge.syntax import Node, parse_source
from forge.syntax.fortran import INTRINSIC_FUNCTIONS
from forge.tokenizer import Vocabulary

# Category name -> begin label id. Continuation id is begin + 1.
CATEGORY_IDS = {
    "identifier": 1,
    "function": 3,
    "type_identifier": 5,
    "primitive_type": 7,
    "number_literal": 9,
    "pointer_reference": 11,
    "pointer_declarator": 13,
    "constant": 15,
    "parallel_construct": 17,
}

_CAPS_RE = re.compile(r"^[A-Z][A-Z0-9_]+$")

_NAMED_CONSTANTS = {"true", "false", "nullptr", "NULL"}

# Nodes whose first child names a function being declared or invoked.
_CALLEE_KINDS = {"function_declarator", "call_expression", "kernel_launch"}


@dataclass(frozen=True)
class AerTagSet:
    language: str
    extended: bool
    roles: dict[str, str]  # role -> category name
    builtins: frozenset[str]  # identifiers mapping to parallel_construct

    @property
    def categories(self) -> dict[str, int]:
        used = set(self.roles.values())
        return {name: cid for name, cid in CATEGORY_IDS.items() if name in used}

    @property
    def num_labels(self) -> int:
        cats = self.categories
        return (max(cats.values()) + 2) if cats else 1

    def label_name(self, label_id: int) -> str:
        if label_id == 0:
            return "O"
        for name, cid in CATEGORY_IDS.items():
            if label_id == cid:
                return name
            if label_id == cid + 1:
                return name + ".cont"
        raise DataError(f"unknown label id {label_id}")


def load_tagset(language: str, extended: bool = False) -> AerTagSet:
    res = resources.files("forge") / "data" / "tags" / f"{language}.txt"
    if not res.is_file():
        raise FormatError(f"no tag table for language {language!r}")
    roles: dict[str, str] = {}
    builtins: set[str] = set()
    for lineno, line in enumerate(res.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "@builtin" and len(parts) == 2:
            builtins.add(parts[1])
            continue
        if len(parts) != 2:
            raise FormatError(f"{language}.txt:{lineno}: bad rule {line!r}")
        role, category = parts
        if category not in CATEGORY_IDS:
            raise FormatError(
                f"{language}.txt:{lineno}: unknown category {category!r}"
            )
        roles[role] = category
    if not extended:
        roles = {
            r: c for r, c in roles.items() if c != "parallel_construct"
        }
        builtins = set()
    return AerTagSet(language, extended, roles, frozenset(builtins))


# -- role computation ---------------------------------------------------------


def _head_name(node: Node) -> Node | None:
    """The leaf naming a callee or declarator head, through wrappers like
    qualification, member access, template arguments, and parens."""
    while not node.is_leaf:
        kind = node.kind
        kids = node.children
        if not kids:
            return None
        if kind in ("qualified_identifier", "field_expression"):
            node = kids[-1]
        elif kind == "template_call":
            node = kids[0]
        elif kind == "parenthesized_declarator":
            node = kids[1] if len(kids) > 2 else kids[0]
        elif kind in ("pointer_declarator", "reference_declarator"):
            node = kids[-1]
        else:
            return None
    if node.kind in ("identifier", "field_identifier", "name_identifier"):
        return node
    return None


class _LeafIndex:
    """Leaves sorted by offset, parent links, and the set of leaves that
    stand in function-name position."""

    def __init__(self, root: Node):
        self.parents: dict[int, Node] = {}
        self.func_names: set[int] = set()
        leaves = []
        stack = [root]
        while stack:
            node = stack.pop()
            for child in node.children:
                self.parents[id(child)] = node
                stack.append(child)
            if node.kind in _CALLEE_KINDS and node.children:
                name = _head_name(node.children[0])
                if name is not None:
                    self.func_names.add(id(name))
            if node.is_leaf and node.end > node.start:
                leaves.append(node)
        leaves.sort(key=lambda n: (n.start, n.end))
        self.leaves = leaves
        self.starts = [n.start for n in leaves]

    def covering(self, start: int, end: int) -> Node | None:
        """The deepest leaf whose range covers [start, end), if any."""
        i = bisect.bisect_right(self.starts, start) - 1
        while i >= 0:
            leaf = self.leaves[i]
            if leaf.start <= start and leaf.end >= end:
                return leaf
            if leaf.end <= start and leaf.start < start:
                # Leaves are disjoint; nothing further left can cover.
                return None
            i -= 1
        return None

    def parent(self, node: Node) -> Node | None:
        return self.parents.get(id(node))

    def ancestors(self, node: Node):
        cur = self.parent(node)
        while cur is not None:
            yield cur
            cur = self.parent(cur)


def _in_parameter_declarator(index: _LeafIndex, leaf: Node) -> bool:
    for anc in index.ancestors(leaf):
        if anc.kind == "parameter_declarator":
            return True
        if anc.kind not in ("init_declarator", "array_declarator"):
            return False
    return False


def _leaf_role(index: _LeafIndex, leaf: Node, source: str, tagset: AerTagSet) -> str | None:
    kind = leaf.kind
    parent = index.parent(leaf)
    pk = parent.kind if parent else ""

    if kind == "identifier" or kind == "field_identifier":
        text = leaf.text(source)
        if text in tagset.builtins:
            return "parallel_builtin"
        if id(leaf) in index.func_names:
            return "function_name"
        if (
            pk == "call_or_subscript"
            and parent.children[0] is leaf
            and text.lower() in INTRINSIC_FUNCTIONS
        ):
            return "function_name"
        if pk == "enumerator" and parent.children and parent.children[0] is leaf:
            return "constant_name"
        if _in_parameter_declarator(index, leaf):
            return "constant_name"
        if text in _NAMED_CONSTANTS or _CAPS_RE.match(text):
            return "constant_name"
        return "identifier"
    if kind == "name_identifier":
        return "function_name"
    if kind == "type_identifier":
        return "type_name"
    if kind in ("primitive_type", "intrinsic_type"):
        return "primitive_type"
    if kind == "number_literal":
        return "number"
    if kind == "logical_literal":
        return "constant_name"
    if kind == "&":
        if pk in ("pointer_expression", "reference_declarator"):
            return "address_amp"
        return None
    if kind == "*":
        if pk == "pointer_declarator":
            return "pointer_star"
        return None
    return None


def extract_labels(
    doc: TokenizedDocument,
    source: str,
    vocab: Vocabulary,
    tagset: AerTagSet,
) -> AerLabeledDocument:
    """Label every token of the document against the parsed source.

    The document must tokenize exactly this source text; offsets are
    reconstructed from the spans, so any mismatch raises DataError.
    """
    root = parse_source(source, tagset.language)
    index = _LeafIndex(root)
    ws_ids = vocab.whitespace_ids()

    labels = [0] * len(doc.tokens)
    offset = 0
    for s, e in doc.word_spans:
        word = vocab.decode(doc.tokens[s:e])
        start, end = offset, offset + len(word)
        offset = end
        if not word or doc.tokens[s] in ws_ids:
            continue
        leaf = index.covering(start, end)
        if leaf is None:
            continue
        role = _leaf_role(index, leaf, source, tagset)
        if role is None:
            continue
        category = tagset.roles.get(role)
        if category is None:
            continue
        cid = CATEGORY_IDS[category]
        labels[s] = cid
        for i in range(s + 1, e):
            labels[i] = cid + 1
    if offset != len(source):
        raise DataError(
            f"{doc.doc_id}: document does not match source text "
            f"(covers {offset} of {len(source)} chars)"
        )
    return AerLabeledDocument(doc=doc, labels=labels)
