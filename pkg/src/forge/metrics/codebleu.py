"""Code-aware translation score.

Four views of a hypothesis against one reference, each in [0, 100]:

- ``ngram``: plain BLEU over word tokens.
- ``weighted_ngram``: the same with keyword tokens up-weighted, so getting
  the control flow right counts more than echoing identifier names.
- ``ast_match``: recall of the reference's internal subtrees, compared by
  shape only (leaf text stripped), as a multiset.
- ``dataflow_match``: recall of normalized def-use edges. Variables are
  renamed var0, var1, ... in order of first appearance per scope, so the
  component is insensitive to identifier choice but sensitive to wiring.

When a side fails to parse the two tree components are dropped and the
weights renormalize over what remains; likewise for a component whose
reference side is vacuous (an empty tree or a program with no def-use
edges), where recall would be 0/0.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from forge.errors import DataError
from forge.metrics.ngram import (
    closest_ref_length,
    content_words,
    ngram_counts,
    sentence_bleu,
)
from forge.profiles import load_keywords
from forge.syntax import Node, is_parse_failure, iter_nodes, parse_source
from forge.syntax.fortran import INTRINSIC_FUNCTIONS

COMPONENT_NAMES = ("ngram", "weighted_ngram", "ast_match", "dataflow_match")
DEFAULT_WEIGHTS = (0.25, 0.25, 0.25, 0.25)
KEYWORD_TOKEN_WEIGHT = 4.0


@dataclass(frozen=True)
class CodeBleuScore:
    score: float
    ngram: float
    weighted_ngram: float
    ast_match: float | None
    dataflow_match: float | None
    excluded: tuple[str, ...]

    def components(self) -> dict:
        return {
            "ngram": self.ngram,
            "weighted_ngram": self.weighted_ngram,
            "ast_match": self.ast_match,
            "dataflow_match": self.dataflow_match,
        }


# -- weighted n-gram ---------------------------------------------------------


def _weighted_bleu(
    hyp: list[str], ref: list[str], keywords: frozenset, max_order: int
) -> float:
    if not hyp:
        return 0.0

    def token_weight(tok: str) -> float:
        return KEYWORD_TOKEN_WEIGHT if tok in keywords else 1.0

    log_sum = 0.0
    orders = 0
    for n in range(1, max_order + 1):
        grams = ngram_counts(hyp, n)
        if not grams:
            break
        limits = ngram_counts(ref, n)
        total = 0.0
        matched = 0.0
        for gram, count in grams.items():
            weight = sum(token_weight(t) for t in gram) / n
            total += weight * count
            matched += weight * min(count, limits[gram])
        if n == 1:
            if matched == 0:
                return 0.0
            p = matched / total
        else:
            p = (matched + 1) / (total + 1)
        log_sum += math.log(p)
        orders += 1
    geo = math.exp(log_sum / orders)
    ref_len = closest_ref_length(len(hyp), [ref])
    bp = 1.0 if len(hyp) > ref_len else math.exp(1 - ref_len / len(hyp))
    return 100.0 * bp * geo


# -- subtree shapes ------------------------------------------------------------


def _escape(kind: str) -> str:
    """Kinds can be literal operator text like "(", so escape the three
    characters the signature grammar itself uses."""
    return (
        kind.replace("%", "%%")
        .replace("(", "%l")
        .replace(")", "%r")
        .replace(" ", "%_")
    )


def subtree_signatures(root: Node) -> Counter:
    """Multiset of shape signatures, one per internal node, leaf text ignored."""
    out: Counter = Counter()

    def render(node: Node) -> str:
        if node.is_leaf:
            return _escape(node.kind)
        sig = "(" + " ".join([_escape(node.kind)] + [render(c) for c in node.children]) + ")"
        out[sig] += 1
        return sig

    render(root)
    return out


# -- def-use edges ---------------------------------------------------------------

_SCOPE_KINDS = frozenset(
    ("function_definition", "subroutine_definition", "program_unit", "module_definition")
)


def dataflow_events(scope: Node, source: str, language: str) -> list:
    """(mode, name) pairs in evaluation order, where mode is "def" or "use".

    Evaluation order is source order except that initializer and rhs reads
    come before the definition they feed. Function and intrinsic callee
    names are control, not data, and emit nothing. Besides feeding the
    def-use edges, this is the basis for undeclared-variable analysis (a
    name with uses and no defs in its scope).
    """
    intrinsics = INTRINSIC_FUNCTIONS if language == "fortran" else frozenset()
    events: list = []

    def emit(leaf: Node, mode: str) -> None:
        events.append((mode, leaf.text(source)))

    def visit_callee(node: Node) -> None:
        if node.is_leaf or node.kind == "qualified_identifier":
            return
        if node.kind == "field_expression":
            visit(node.children[0], "use")
            return
        if node.kind == "template_call":
            visit_callee(node.children[0])
            for child in node.children[1:]:
                visit(child, "use")
            return
        visit(node, "use")

    def visit(node: Node, mode: str = "use") -> None:
        if node.is_leaf:
            if node.kind == "identifier":
                emit(node, mode)
            return
        kind = node.kind
        kids = node.children
        if kind in _SCOPE_KINDS and node is not scope:
            return
        if kind in ("type_definition", "alias_declaration"):
            return
        if kind in (
            "declaration",
            "type_declaration",
            "parameter_declaration",
            "parameter_list",
        ):
            for child in kids:
                visit(child, "def")
            return
        if kind == "parameter_declarator":
            for child in kids:
                visit(child, mode)
            return
        if kind == "init_declarator":
            for child in kids[1:]:
                visit(child, "use")
            visit(kids[0], mode)
            return
        if kind in ("pointer_declarator", "reference_declarator"):
            visit(kids[-1], mode)
            return
        if kind == "parenthesized_declarator":
            visit(kids[1] if len(kids) > 2 else kids[0], mode)
            return
        if kind in ("array_declarator", "call_declarator"):
            for child in kids[1:]:
                visit(child, "use")
            visit(kids[0], mode)
            return
        if kind == "function_declarator":
            for child in kids[1:]:
                visit(child, "use")
            return
        if kind in ("assignment_expression", "assignment_statement"):
            compound = len(kids) > 1 and kids[1].kind != "="
            if compound:
                visit(kids[0], "use")
            for child in kids[2:]:
                visit(child, "use")
            visit(kids[0], "def")
            return
        if kind == "update_expression":
            operand = kids[1] if kids[0].kind in ("++", "--") else kids[0]
            visit(operand, "use")
            visit(operand, "def")
            return
        if kind in ("call_expression", "kernel_launch"):
            visit_callee(kids[0])
            for child in kids[1:]:
                visit(child, "use")
            return
        if kind == "call_or_subscript":
            head = kids[0]
            if head.is_leaf and head.text(source).lower() in intrinsics:
                pass
            else:
                visit(head, mode)
            for child in kids[1:]:
                visit(child, "use")
            return
        if kind in ("subscript_expression", "field_expression"):
            visit(kids[0], mode)
            for child in kids[1:]:
                visit(child, "use")
            return
        if kind == "enumerator":
            for child in kids[1:]:
                visit(child, "use")
            visit(kids[0], "def")
            return
        if kind == "do_statement":
            for pos, child in enumerate(kids):
                if pos == 1 and child.is_leaf and child.kind == "identifier":
                    emit(child, "def")
                else:
                    visit(child, "use")
            return
        for child in kids:
            visit(child, "use")

    for child in scope.children:
        visit(child)
    return events


def _edges_from_events(events: Sequence) -> list:
    names: dict = {}
    def_counts: dict = {}
    governing: dict = {}
    edges = []
    for mode, name in events:
        var = names.setdefault(name, f"var{len(names)}")
        if mode == "def":
            ordinal = def_counts.get(var, 0)
            def_counts[var] = ordinal + 1
            governing[var] = [ordinal, 0]
        else:
            state = governing.setdefault(var, [-1, 0])
            edges.append((var, state[0], state[1]))
            state[1] += 1
    return edges


def iter_scopes(root: Node):
    """The root residue plus every function-like definition, in source order."""
    for node in iter_nodes(root):
        if node is root or node.kind in _SCOPE_KINDS:
            yield node


def dataflow_edges(root: Node, source: str, language: str) -> list:
    """Normalized (variable, def_ordinal, use_ordinal) triples, one per read.

    def_ordinal is the index of the definition governing the read within
    its scope, or -1 for a read before any definition; use_ordinal counts
    reads under that same definition. Each function-like scope (and the
    residue at top level) numbers its variables independently.
    """
    edges = []
    for scope in iter_scopes(root):
        edges.extend(_edges_from_events(dataflow_events(scope, source, language)))
    return edges


# -- the combined score -----------------------------------------------------------


def _keyword_language(language: str) -> str:
    return "cpp" if language == "c" else language


def codebleu(
    hypothesis: str,
    reference: str,
    language: str,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
    max_order: int = 4,
) -> CodeBleuScore:
    if len(weights) != len(COMPONENT_NAMES):
        raise DataError(f"expected {len(COMPONENT_NAMES)} weights, got {len(weights)}")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise DataError(f"component weights must sum to 1, got {sum(weights)!r}")

    hyp_tokens = content_words(hypothesis)
    ref_tokens = content_words(reference)
    keywords = load_keywords(_keyword_language(language))

    ngram = sentence_bleu(hyp_tokens, [ref_tokens], max_order)
    weighted = _weighted_bleu(hyp_tokens, ref_tokens, frozenset(keywords), max_order)

    ast_match: float | None = None
    dataflow_match: float | None = None
    excluded: list = []

    hyp_tree = parse_source(hypothesis, language)
    ref_tree = parse_source(reference, language)
    if is_parse_failure(hyp_tree) or is_parse_failure(ref_tree):
        excluded += ["ast_match", "dataflow_match"]
    else:
        ref_sigs = subtree_signatures(ref_tree)
        if ref_sigs:
            hyp_sigs = subtree_signatures(hyp_tree)
            overlap = sum((hyp_sigs & ref_sigs).values())
            ast_match = 100.0 * overlap / sum(ref_sigs.values())
        else:
            excluded.append("ast_match")
        ref_edges = Counter(dataflow_edges(ref_tree, reference, language))
        if ref_edges:
            hyp_edges = Counter(dataflow_edges(hyp_tree, hypothesis, language))
            overlap = sum((hyp_edges & ref_edges).values())
            dataflow_match = 100.0 * overlap / sum(ref_edges.values())
        else:
            excluded.append("dataflow_match")

    values = dict(
        zip(COMPONENT_NAMES, (ngram, weighted, ast_match, dataflow_match))
    )
    live = [
        (weight, values[name])
        for name, weight in zip(COMPONENT_NAMES, weights)
        if values[name] is not None
    ]
    weight_sum = sum(w for w, _ in live)
    score = sum(w * v for w, v in live) / weight_sum if weight_sum else 0.0
    return CodeBleuScore(score, ngram, weighted, ast_match, dataflow_match, tuple(excluded))
