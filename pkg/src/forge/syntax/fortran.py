"""Line-oriented parser for free-form Fortran.

Covers the statement shapes common in numerical code: program units, type
declarations with attributes, assignments, do/if blocks, and call
statements. Unrecognized statements degrade to generic nodes rather than
failing, and block structure is rebuilt from the opener/end keywords.
"""

from __future__ import annotations

import re
from typing import NamedTuple

from forge.syntax.tree import Node


class FTok(NamedTuple):
    kind: str  # ident | number | string | comment | dotop | punct | newline
    start: int
    end: int
    text: str


_PATTERNS = [
    ("comment", re.compile(r"![^\n]*")),
    ("string", re.compile(r"'(?:''|[^'\n])*'?|\"(?:\"\"|[^\"\n])*\"?")),
    ("number", re.compile(r"(?:\d+\.\d*|\.\d+|\d+)(?:[deDE][+-]?\d+)?(?:_[A-Za-z0-9_]+)?")),
    ("dotop", re.compile(r"\.[A-Za-z]+\.")),
    ("ident", re.compile(r"[A-Za-z][A-Za-z0-9_]*")),
]

_PUNCT2 = ("::", "**", "//", "==", "/=", "<=", ">=", "=>")

INTRINSIC_TYPES = {
    "integer", "real", "logical", "character", "complex", "doubleprecision",
}

ATTRIBUTES = {
    "parameter", "dimension", "allocatable", "pointer", "target", "intent",
    "optional", "save", "public", "private", "external", "intrinsic", "value",
}

UNIT_OPENERS = {"program", "module", "subroutine", "function"}

# Words that may follow "end" as part of the closer itself.
_BLOCK_WORDS = {
    "do", "if", "program", "module", "subroutine", "function", "select",
    "where", "type", "interface", "block", "associate", "forall",
}

INTRINSIC_FUNCTIONS = {
    "abs", "min", "max", "mod", "modulo", "sqrt", "exp", "log", "log10",
    "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "sinh", "cosh",
    "tanh", "sum", "product", "size", "shape", "lbound", "ubound", "len",
    "len_trim", "trim", "adjustl", "adjustr", "index", "nint", "int",
    "floor", "ceiling", "dble", "sngl", "cmplx", "aimag", "conjg", "sign",
    "matmul", "dot_product", "transpose", "maxval", "minval", "maxloc",
    "minloc", "count", "any", "all", "allocated", "associated", "present",
    "huge", "tiny", "epsilon", "kind", "selected_real_kind",
    "selected_int_kind", "real", "merge", "pack", "reshape", "spread",
}


def lex_fortran(source: str) -> list[FTok]:
    toks: list[FTok] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            toks.append(FTok("newline", i, i + 1, "\n"))
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            continue
        matched = False
        for kind, pat in _PATTERNS:
            m = pat.match(source, i)
            if m:
                toks.append(FTok(kind, i, m.end(), m.group()))
                i = m.end()
                matched = True
                break
        if matched:
            continue
        two = source[i : i + 2]
        if two in _PUNCT2:
            toks.append(FTok("punct", i, i + 2, two))
            i += 2
        else:
            toks.append(FTok("punct", i, i + 1, ch))
            i += 1
    return toks


def _split_statements(toks: list[FTok]) -> list[list[FTok]]:
    """Group tokens into logical statements, honoring '&' continuations and
    ';' separators; comments are dropped here and re-attached at the root."""
    stmts: list[list[FTok]] = []
    cur: list[FTok] = []
    for tok in toks:
        if tok.kind == "comment":
            continue
        if tok.kind == "newline" or (tok.kind == "punct" and tok.text == ";"):
            if cur and cur[-1].text == "&":
                cur.pop()  # continuation: swallow the ampersand and newline
                continue
            if cur:
                stmts.append(cur)
                cur = []
            continue
        if tok.text == "&" and cur and cur[0].text.lower() != "&":
            cur.append(tok)
            continue
        cur.append(tok)
    if cur:
        stmts.append(cur)
    return stmts


class _StmtParser:
    """Expression/statement parser over one logical line."""

    def __init__(self, toks: list[FTok]):
        self.toks = toks
        self.pos = 0

    def peek(self, k: int = 0) -> FTok | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.text.lower() == text

    def leaf(self, kind: str | None = None) -> Node:
        t = self.toks[self.pos]
        self.pos += 1
        return Node(kind or t.text.lower(), t.start, t.end)

    def rest_leaves(self) -> list[Node]:
        out = []
        while self.peek() is not None:
            t = self.peek()
            if t.kind == "ident":
                out.append(self.leaf("identifier"))
            elif t.kind == "number":
                out.append(self.leaf("number_literal"))
            elif t.kind == "string":
                out.append(self.leaf("string_literal"))
            else:
                out.append(self.leaf())
        return out

    # expressions ------------------------------------------------------

    def expression(self) -> Node:
        return self._or_expr()

    def _bin(self, sub, ops: tuple[str, ...], kind="binary_expression") -> Node:
        node = sub()
        while True:
            t = self.peek()
            if t is None or t.text.lower() not in ops:
                return node
            op = self.leaf()
            node = Node(kind, node.start, 0, [node, op, sub()])
            node.end = node.children[-1].end

    def _or_expr(self):
        return self._bin(self._and_expr, (".or.",))

    def _and_expr(self):
        return self._bin(self._not_expr, (".and.",))

    def _not_expr(self):
        if self.at(".not."):
            op = self.leaf()
            operand = self._not_expr()
            return Node("unary_expression", op.start, operand.end, [op, operand])
        return self._cmp_expr()

    def _cmp_expr(self):
        return self._bin(
            self._concat_expr,
            ("==", "/=", "<", "<=", ">", ">=", ".eq.", ".ne.", ".lt.", ".le.", ".gt.", ".ge."),
        )

    def _concat_expr(self):
        return self._bin(self._add_expr, ("//",))

    def _add_expr(self):
        return self._bin(self._mul_expr, ("+", "-"))

    def _mul_expr(self):
        return self._bin(self._pow_expr, ("*", "/"))

    def _pow_expr(self):
        node = self._unary_expr()
        if self.at("**"):
            op = self.leaf()
            right = self._pow_expr()  # right associative
            return Node("binary_expression", node.start, right.end, [node, op, right])
        return node

    def _unary_expr(self):
        if self.at("-") or self.at("+"):
            op = self.leaf()
            operand = self._unary_expr()
            return Node("unary_expression", op.start, operand.end, [op, operand])
        return self._postfix_expr()

    def _postfix_expr(self):
        node = self._primary_expr()
        while True:
            if self.at("(") and node.kind in ("identifier", "field_expression"):
                args = self._paren_args()
                node = Node(
                    "call_or_subscript", node.start, args.end, [node, args]
                )
            elif self.at("%"):
                op = self.leaf()
                if self.peek() is not None and self.peek().kind == "ident":
                    field = self.leaf("field_identifier")
                    node = Node(
                        "field_expression", node.start, field.end, [node, op, field]
                    )
                else:
                    return node
            else:
                return node

    def _paren_args(self) -> Node:
        kids = [self.leaf()]  # '('
        depth = 1
        while self.peek() is not None and depth:
            if self.at("("):
                kids.append(self._paren_args())
                continue
            if self.at(")"):
                depth -= 1
                kids.append(self.leaf())
                break
            if self.at(",") or self.at(":"):
                kids.append(self.leaf())
                continue
            kids.append(self.expression())
        node = Node("argument_list", kids[0].start, kids[-1].end, kids)
        return node

    def _primary_expr(self):
        t = self.peek()
        if t is None:
            return Node("missing", 0, 0)
        if t.kind == "number":
            return self.leaf("number_literal")
        if t.kind == "string":
            return self.leaf("string_literal")
        if t.kind == "dotop":
            return self.leaf("logical_literal")
        if t.kind == "ident":
            return self.leaf("identifier")
        if t.text == "(":
            kids = [self.leaf()]
            kids.append(self.expression())
            if self.at(")"):
                kids.append(self.leaf())
            return Node("parenthesized_expression", kids[0].start, kids[-1].end, kids)
        if t.text in ("*",):  # e.g. print *, ...
            return self.leaf()
        return self.leaf()


def _lower_words(toks: list[FTok]) -> list[str]:
    return [t.text.lower() for t in toks if t.kind == "ident"]


def _first_word(toks: list[FTok]) -> str:
    for t in toks:
        if t.kind == "ident":
            return t.text.lower()
        return ""
    return ""


def parse_fortran(source: str) -> Node:
    toks = lex_fortran(source)
    comments = [t for t in toks if t.kind == "comment"]
    stmts = _split_statements(toks)

    root_children: list[Node] = []
    stack: list[Node] = []  # open block nodes

    def emit(node: Node):
        (stack[-1].children if stack else root_children).append(node)

    def open_block(node: Node):
        emit(node)
        stack.append(node)

    def close_block(end_node: Node, kinds: tuple[str, ...]):
        emit_into = None
        while stack:
            top = stack[-1]
            if top.kind in kinds or kinds == ("*",):
                emit_into = stack.pop()
                break
            stack.pop()
        if emit_into is not None:
            emit_into.children.append(end_node)
            emit_into.end = end_node.end
        else:
            root_children.append(end_node)

    for stmt in stmts:
        node = _parse_statement(stmt)
        first = _first_word(stmt)
        words = _lower_words(stmt)
        if node.kind in (
            "subroutine_definition",
            "function_definition",
            "program_unit",
            "module_definition",
            "do_statement",
            "if_then_statement",
            "select_statement",
            "interface_block",
            "where_block",
        ):
            open_block(node)
        elif first == "end" or first in (
            "enddo", "endif", "endfunction", "endsubroutine", "endprogram",
            "endmodule", "endselect", "endinterface", "endwhere",
        ):
            target: tuple[str, ...]
            tail = words[1] if first == "end" and len(words) > 1 else first.removeprefix("end")
            mapping = {
                "do": ("do_statement",),
                "if": ("if_then_statement",),
                "subroutine": ("subroutine_definition",),
                "function": ("function_definition",),
                "program": ("program_unit",),
                "module": ("module_definition",),
                "select": ("select_statement",),
                "interface": ("interface_block",),
                "where": ("where_block",),
            }
            target = mapping.get(tail, ("*",))
            close_block(node, target)
        elif node.kind in ("else_clause", "case_clause", "contains_statement"):
            # stays inside the open block
            emit(node)
        else:
            emit(node)

    root_children.extend(Node("comment", c.start, c.end) for c in comments)
    root_children.sort(key=lambda n: n.start)
    end = len(source)
    return Node("translation_unit", 0, end, root_children)


def _parse_statement(toks: list[FTok]) -> Node:
    p = _StmtParser(toks)
    t = p.peek()
    start = toks[0].start
    end = toks[-1].end

    def wrap(kind: str, kids: list[Node]) -> Node:
        kids = [k for k in kids if k is not None]
        if not kids:
            return Node(kind, start, end)
        return Node(kind, kids[0].start, kids[-1].end, kids)

    if t is None:
        return Node("empty_statement", start, end)

    word = t.text.lower() if t.kind == "ident" else ""

    # numeric statement label prefix: "100 continue"
    if t.kind == "number":
        label = p.leaf("statement_label")
        rest = _parse_statement(toks[p.pos:]) if p.peek() is not None else None
        kids = [label] + ([rest] if rest else [])
        return wrap("labeled_statement", kids)

    if word in ("recursive", "pure", "elemental"):
        quals = []
        while p.peek() is not None and p.peek().text.lower() in (
            "recursive", "pure", "elemental",
        ):
            quals.append(p.leaf("type_qualifier"))
        inner = _parse_statement(toks[p.pos:])
        return wrap(inner.kind, quals + inner.children) if inner.children else wrap(
            inner.kind, quals
        )

    if word in ("subroutine", "function"):
        kw = p.leaf()
        kids = [kw]
        if p.peek() is not None and p.peek().kind == "ident":
            kids.append(p.leaf("name_identifier"))
        if p.at("("):
            args = [p.leaf()]
            while p.peek() is not None and not p.at(")"):
                if p.at(","):
                    args.append(p.leaf())
                elif p.peek().kind == "ident":
                    args.append(p.leaf("identifier"))
                else:
                    args.append(p.leaf())
            if p.at(")"):
                args.append(p.leaf())
            kids.append(wrap("parameter_list", args))
        if p.at("result"):
            kids.append(p.leaf("type_qualifier"))
            kids.extend(p.rest_leaves())
        kind = "subroutine_definition" if word == "subroutine" else "function_definition"
        return wrap(kind, kids)

    if word in ("program", "module"):
        kw = p.leaf()
        kids = [kw]
        if p.peek() is not None and p.peek().kind == "ident":
            kids.append(p.leaf("name_identifier"))
        return wrap("program_unit" if word == "program" else "module_definition", kids)

    if word == "end" or (word or "").startswith("end"):
        kids = [p.leaf()]
        while p.peek() is not None:
            t = p.peek()
            if t.kind == "ident" and t.text.lower() not in _BLOCK_WORDS:
                kids.append(p.leaf("name_identifier"))
            else:
                kids.append(p.leaf())
        return wrap("end_statement", kids)

    if word == "use":
        kids = [p.leaf()]
        kids.extend(p.rest_leaves())
        return wrap("use_statement", kids)

    if word == "implicit":
        kids = [p.leaf()]
        while p.peek() is not None:
            kids.append(p.leaf())
        return wrap("implicit_statement", kids)

    if word == "contains":
        return wrap("contains_statement", [p.leaf()])

    if word in ("integer", "real", "logical", "character", "complex", "double", "type"):
        return _parse_type_declaration(p, wrap, word)

    if word == "if":
        kw = p.leaf()
        kids = [kw]
        if p.at("("):
            kids.append(p._paren_args())
        if p.at("then"):
            kids.append(p.leaf())
            return wrap("if_then_statement", kids)
        if p.peek() is not None:
            inner = _parse_statement(toks[p.pos :])
            kids.append(inner)
        return wrap("if_statement", kids)

    if word in ("else", "elseif"):
        kids = [p.leaf()]
        if p.at("if") or word == "elseif":
            if p.at("if"):
                kids.append(p.leaf())
            if p.at("("):
                kids.append(p._paren_args())
            if p.at("then"):
                kids.append(p.leaf())
        return wrap("else_clause", kids)

    if word == "do":
        kw = p.leaf()
        kids = [kw]
        if p.at("while"):
            kids.append(p.leaf())
            if p.at("("):
                kids.append(p._paren_args())
            return wrap("do_statement", kids)
        if p.peek() is not None and p.peek().kind == "ident":
            kids.append(p.leaf("identifier"))
            if p.at("="):
                kids.append(p.leaf())
                kids.append(p.expression())
                while p.at(","):
                    kids.append(p.leaf())
                    kids.append(p.expression())
        return wrap("do_statement", kids)

    if word == "call":
        kw = p.leaf()
        kids = [kw]
        if p.peek() is not None and p.peek().kind == "ident":
            callee = p.leaf("name_identifier")
            if p.at("("):
                args = p._paren_args()
                kids.append(wrap("call_expression", [callee, args]))
            else:
                kids.append(wrap("call_expression", [callee]))
        return wrap("call_statement", kids)

    if word in ("return", "stop", "cycle", "exit", "continue"):
        kids = [p.leaf()]
        kids.extend(p.rest_leaves())
        return wrap(f"{word}_statement", kids)

    if word in ("print", "write", "read", "open", "close", "format", "rewind"):
        kids = [p.leaf()]
        if p.at("("):
            kids.append(p._paren_args())
        if p.at("*"):
            kids.append(p.leaf())
        while p.at(","):
            kids.append(p.leaf())
            kids.append(p.expression())
        kids.extend(p.rest_leaves())
        return wrap("io_statement", kids)

    if word in ("allocate", "deallocate"):
        kids = [p.leaf()]
        if p.at("("):
            kids.append(p._paren_args())
        return wrap("allocate_statement", kids)

    if word in ("select", "selectcase"):
        kids = [p.leaf()]
        kids.extend(p.rest_leaves())
        return wrap("select_statement", kids)

    if word == "case":
        kids = [p.leaf()]
        kids.extend(p.rest_leaves())
        return wrap("case_clause", kids)

    if word == "where":
        kids = [p.leaf()]
        if p.at("("):
            kids.append(p._paren_args())
        if p.peek() is None:
            return wrap("where_block", kids)
        inner = _parse_statement(toks[p.pos :])
        kids.append(inner)
        return wrap("where_statement", kids)

    if word == "interface":
        kids = [p.leaf()]
        kids.extend(p.rest_leaves())
        return wrap("interface_block", kids)

    if word == "goto":
        kids = [p.leaf()]
        kids.extend(p.rest_leaves())
        return wrap("goto_statement", kids)

    # assignment or bare expression
    lhs = p.expression()
    if p.at("=") or p.at("=>"):
        op = p.leaf()
        rhs = p.expression()
        trailing = p.rest_leaves()
        return wrap("assignment_statement", [lhs, op, rhs] + trailing)
    trailing = p.rest_leaves()
    return wrap("unknown_statement", [lhs] + trailing)


def _parse_type_declaration(p: _StmtParser, wrap, word: str) -> Node:
    kids: list[Node] = []
    # type spec: integer / real(8) / double precision / character(len=10) / type(foo)
    if word == "double":
        kids.append(p.leaf("intrinsic_type"))
        if p.at("precision"):
            kids.append(p.leaf("intrinsic_type"))
    elif word == "type":
        kids.append(p.leaf())
        if p.at("("):
            args = [p.leaf()]
            while p.peek() is not None and not p.at(")"):
                if p.peek().kind == "ident":
                    args.append(p.leaf("type_identifier"))
                else:
                    args.append(p.leaf())
            if p.at(")"):
                args.append(p.leaf())
            kids.append(wrap("derived_type_spec", args))
        elif p.peek() is not None and p.peek().kind == "ident":
            # "type foo" opens a derived type definition; treat shallowly
            kids.append(p.leaf("type_identifier"))
            return wrap("derived_type_statement", kids)
    else:
        kids.append(p.leaf("intrinsic_type"))
        if p.at("("):
            args = p._paren_args()
            kids.append(args)
    if (
        p.peek() is not None
        and p.peek().kind == "ident"
        and p.peek().text.lower() == "function"
    ):
        inner = _parse_statement(p.toks[p.pos:])
        return wrap(inner.kind, kids + inner.children)
    is_parameter = False
    while p.at(","):
        kids.append(p.leaf())
        if p.peek() is not None and p.peek().kind == "ident":
            attr = p.peek().text.lower()
            if attr == "parameter":
                is_parameter = True
            kids.append(p.leaf("type_qualifier"))
            if p.at("("):
                if attr == "intent":
                    # intent(in) names a mode, not a variable reference
                    kids.append(p.leaf())
                    while p.peek() is not None and not p.at(")"):
                        kids.append(p.leaf())
                    if p.at(")"):
                        kids.append(p.leaf())
                else:
                    kids.append(p._paren_args())
    if p.at("::"):
        kids.append(p.leaf())
    # declared entities
    while p.peek() is not None:
        t = p.peek()
        if t.kind == "ident":
            name = p.leaf("identifier")
            entity: Node = name
            if p.at("("):
                args = p._paren_args()
                entity = Node("array_declarator", name.start, args.end, [name, args])
            if p.at("=") :
                eq = p.leaf()
                value = p.expression()
                entity = Node(
                    "init_declarator", entity.start, value.end, [entity, eq, value]
                )
            if is_parameter:
                entity = Node(
                    "parameter_declarator", entity.start, entity.end, [entity]
                )
            kids.append(entity)
        else:
            kids.append(p.leaf())
    return wrap("type_declaration", kids)
