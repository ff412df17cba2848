"""Recursive-descent parser for C/C++/CUDA kernels.

Produces a CST with tree-sitter-style node kinds. Strictly left-to-right:
no backtracking past a statement boundary, so text before a syntax error
always parses the same way. Unparsable stretches become ERROR nodes whose
leaves carry the neutral kind ``error_token``.
"""

from __future__ import annotations

from forge.syntax.clexer import Tok, lex
from forge.syntax.tree import Node

PRIMITIVE_TYPES = {
    "void", "bool", "char", "short", "int", "long", "float", "double",
    "signed", "unsigned", "wchar_t", "char16_t", "char32_t",
    "size_t", "ssize_t", "ptrdiff_t", "int8_t", "int16_t", "int32_t",
    "int64_t", "uint8_t", "uint16_t", "uint32_t", "uint64_t", "uint",
}

QUALIFIERS = {
    "const", "volatile", "constexpr", "mutable", "restrict",
    "__restrict__", "__restrict", "typename",
}

STORAGE = {"static", "extern", "inline", "register", "thread_local", "virtual"}

CUDA_QUALIFIERS = {
    "__global__", "__device__", "__host__", "__shared__", "__constant__",
    "__managed__", "__forceinline__", "__noinline__", "__launch_bounds__",
}

STMT_KEYWORDS = {
    "if", "else", "for", "while", "do", "return", "break", "continue",
    "switch", "case", "default", "goto",
}

_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="}

# Binary operator precedence, loosest first.
_BINARY_LEVELS = [
    {"||"},
    {"&&"},
    {"|"},
    {"^"},
    {"&"},
    {"==", "!="},
    {"<", ">", "<=", ">="},
    {"<<", ">>"},
    {"+", "-"},
    {"*", "/", "%"},
]

_UNARY_OPS = {"!", "~", "+", "-", "++", "--"}


class _ParseError(Exception):
    pass


class CParser:
    def __init__(self, source: str, cuda: bool = False):
        self.source = source
        self.cuda = cuda
        all_toks = lex(source, cuda_launch=cuda)
        self.comments = [t for t in all_toks if t.kind == "comment"]
        self.toks = [t for t in all_toks if t.kind != "comment"]
        self.pos = 0

    # -- token access -------------------------------------------------------

    def peek(self, k: int = 0) -> Tok | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.text == text

    def at_kind(self, kind: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.kind == kind

    def advance(self) -> Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def leaf(self, kind: str | None = None) -> Node:
        t = self.advance()
        return Node(kind or t.text, t.start, t.end)

    def expect(self, text: str) -> Node | None:
        """Consume text if present; at EOF or mismatch, tolerate silently
        for closers so truncated files still parse their prefix."""
        if self.at(text):
            return self.leaf()
        if text in ")]}" or self.peek() is None:
            return None
        raise _ParseError(f"expected {text!r} at {self._where()}")

    def _where(self) -> str:
        t = self.peek()
        return f"offset {t.start} ({t.text!r})" if t else "end of input"

    # -- entry --------------------------------------------------------------

    def parse(self) -> Node:
        children: list[Node] = []
        while self.peek() is not None:
            start = self.pos
            try:
                children.append(self.external())
            except _ParseError:
                children.append(self._recover(start))
        root_start = 0
        root_end = len(self.source)
        children.extend(
            Node("comment", c.start, c.end) for c in self.comments
        )
        children.sort(key=lambda n: n.start)
        return Node("translation_unit", root_start, root_end, children)

    def _recover(self, failed_from: int) -> Node:
        """Rewind to where the failed construct began, then swallow tokens
        through the next ';' or '}' as an ERROR node."""
        self.pos = failed_from
        leaves = []
        if self.peek() is not None:
            leaves.append(Node("error_token", *self._span(self.advance())))
        while self.peek() is not None:
            if self.toks[self.pos - 1].text in (";", "}"):
                break
            t = self.advance()
            leaves.append(Node("error_token", t.start, t.end))
        start = leaves[0].start if leaves else 0
        end = leaves[-1].end if leaves else 0
        return Node("ERROR", start, end, leaves)

    @staticmethod
    def _span(t: Tok) -> tuple[int, int]:
        return t.start, t.end

    # -- top level ----------------------------------------------------------

    def external(self) -> Node:
        if self.at_kind("preproc"):
            return self.leaf("preproc_directive")
        if self.at("template"):
            return self.template_declaration()
        if self.at("using") or self.at("typedef"):
            return self._consume_through_semi(
                "alias_declaration" if self.at("using") else "type_definition"
            )
        if self.at("namespace"):
            return self.namespace_definition()
        if self.at(";"):
            return self.leaf()
        if (
            self.at("struct") or self.at("class") or self.at("union") or self.at("enum")
        ) and self.at_kind("ident", 1) and (self.at("{", 2) or self.at(":", 2) or self.at(";", 2)):
            return self.class_specifier()
        return self.declaration_or_function()

    def template_declaration(self) -> Node:
        kids = [self.leaf()]  # 'template'
        if self.at("<"):
            kids.append(self._template_parameter_list())
        kids.append(self.external())
        return self._wrap("template_declaration", kids)

    def _template_parameter_list(self) -> Node:
        kids = [self.leaf()]  # '<'
        depth = 1
        while self.peek() is not None and depth:
            if self.at("<"):
                kids.append(self.leaf())
                depth += 1
            elif self.at(">"):
                depth -= 1
                kids.append(self.leaf())
            elif self.at("typename") or self.at("class"):
                param = [self.leaf()]
                if self.at_kind("ident"):
                    param.append(self.leaf("type_identifier"))
                kids.append(self._wrap("type_parameter_declaration", param))
            elif self.at_kind("ident"):
                kids.append(self.leaf("type_identifier"))
            else:
                kids.append(self.leaf())
        return self._wrap("template_parameter_list", kids)

    def namespace_definition(self) -> Node:
        kids = [self.leaf()]
        if self.at_kind("ident"):
            kids.append(self.leaf("identifier"))
        if self.at("{"):
            body = [self.leaf()]
            while self.peek() is not None and not self.at("}"):
                start = self.pos
                try:
                    body.append(self.external())
                except _ParseError:
                    body.append(self._recover(start))
            if self.at("}"):
                body.append(self.leaf())
            kids.append(self._wrap("declaration_list", body))
        return self._wrap("namespace_definition", kids)

    def class_specifier(self) -> Node:
        kids = [self.leaf()]  # struct/class/...
        kind = "enum_specifier" if kids[0].kind == "enum" else "class_specifier"
        if self.at_kind("ident"):
            kids.append(self.leaf("type_identifier"))
        if self.at(":"):  # base clause, consume shallowly
            kids.append(self.leaf())
            while self.peek() is not None and not self.at("{") and not self.at(";"):
                kids.append(self.leaf("type_identifier" if self.at_kind("ident") else None))
        if self.at("{"):
            body = [self.leaf()]
            while self.peek() is not None and not self.at("}"):
                start = self.pos
                try:
                    if kind == "enum_specifier":
                        if self.at_kind("ident"):
                            name = self.leaf("identifier")
                            if self.at("="):
                                eq = self.leaf()
                                val = self.assignment_expression()
                                body.append(
                                    self._wrap("enumerator", [name, eq, val])
                                )
                            else:
                                body.append(self._wrap("enumerator", [name]))
                        else:
                            body.append(self.leaf())
                    else:
                        body.append(self.external())
                except _ParseError:
                    body.append(self._recover(start))
            if self.at("}"):
                body.append(self.leaf())
            kids.append(self._wrap("field_declaration_list", body))
        if self.at(";"):
            kids.append(self.leaf())
        return self._wrap(kind, kids)

    def _consume_through_semi(self, kind: str) -> Node:
        kids = []
        while self.peek() is not None and not self.at(";"):
            if self.at_kind("ident"):
                kids.append(self.leaf("identifier"))
            else:
                kids.append(self.leaf())
        if self.at(";"):
            kids.append(self.leaf())
        return self._wrap(kind, kids)

    # -- declarations ---------------------------------------------------------

    def declaration_or_function(self) -> Node:
        specs = self.decl_specifiers()
        if not specs:
            raise _ParseError(f"no declaration specifiers at {self._where()}")
        if self.at(";"):  # e.g. "struct foo;" already consumed by specs
            specs.append(self.leaf())
            return self._wrap("declaration", specs)
        decl = self.declarator()
        if self.at("{"):
            body = self.compound_statement()
            return self._wrap("function_definition", specs + [decl, body])
        kids = specs + [self.init_declarator_rest(decl)]
        while self.at(","):
            kids.append(self.leaf())
            kids.append(self.init_declarator_rest(self.declarator()))
        semi = self.expect(";")
        if semi:
            kids.append(semi)
        return self._wrap("declaration", kids)

    def decl_specifiers(self) -> list[Node]:
        out: list[Node] = []
        saw_type = False
        while True:
            t = self.peek()
            if t is None:
                break
            if t.text in STORAGE:
                out.append(self.leaf("storage_class_specifier"))
            elif t.text in QUALIFIERS:
                out.append(self.leaf("type_qualifier"))
            elif t.text in CUDA_QUALIFIERS:
                node = self.leaf("cuda_qualifier")
                # __launch_bounds__(...) takes arguments.
                if self.at("("):
                    args = self._balanced("(", ")")
                    node = self._wrap("cuda_qualifier", [node] + args)
                out.append(node)
            elif t.text in PRIMITIVE_TYPES and not saw_type:
                prim = [self.leaf("primitive_type")]
                while self.peek() is not None and self.peek().text in PRIMITIVE_TYPES:
                    prim.append(self.leaf("primitive_type"))
                out.append(
                    prim[0]
                    if len(prim) == 1
                    else self._wrap("sized_type_specifier", prim)
                )
                saw_type = True
            elif t.text in ("struct", "class", "union", "enum") and not saw_type:
                kw = self.leaf()
                name = self.leaf("type_identifier") if self.at_kind("ident") else None
                out.append(
                    self._wrap("struct_specifier", [kw] + ([name] if name else []))
                )
                saw_type = True
            elif t.kind == "ident" and not saw_type and self._ident_is_type():
                name = self.leaf("type_identifier")
                if self.at("<"):
                    args = self._template_argument_list()
                    name = self._wrap("template_type", [name, args])
                while self.at("::") and self.at_kind("ident", 1):
                    sep = self.leaf()
                    inner = self.leaf("type_identifier")
                    name = self._wrap("qualified_type", [name, sep, inner])
                    if self.at("<"):
                        args = self._template_argument_list()
                        name = self._wrap("template_type", [name, args])
                out.append(name)
                saw_type = True
            else:
                break
        return out

    def _ident_is_type(self) -> bool:
        """In specifier position an identifier is a type when another
        declarator-looking token follows: ident, '*', '&', or '::'."""
        nxt = self.peek(1)
        if nxt is None:
            return False
        if nxt.kind == "ident":
            return True
        if nxt.text in ("*", "&", "::"):
            return True
        if nxt.text == "<":
            return self._template_args_ahead(1)
        return False

    # Tokens that mark a '<' as comparison rather than template arguments.
    _ANGLE_STOP = {
        ";", "{", "}", "&&", "||", "==", "!=", "<=", ">=",
        "+", "-", "/", "%", "?", "=", "+=", "-=", "*=", "/=",
    }

    def _skip_angle(self, from_k: int) -> int | None:
        """Index just past a balanced '<...>' starting at from_k, scanning a
        bounded window; None when it does not close."""
        depth = 0
        for k in range(from_k, from_k + 24):
            t = self.peek(k)
            if t is None:
                return None
            if t.text == "<":
                depth += 1
            elif t.text == ">":
                depth -= 1
                if depth == 0:
                    return k + 1
            elif t.text == ">>":
                if depth < 2:
                    return None
                depth -= 2
                if depth == 0:
                    return k + 1
            elif t.text in self._ANGLE_STOP or t.kind in ("string", "char"):
                return None
        return None

    def _template_args_ahead(self, from_k: int) -> bool:
        """Scan a bounded window for a balanced '<...>' followed by a
        declarator or call shape."""
        end = self._skip_angle(from_k)
        if end is None:
            return False
        after = self.peek(end)
        return after is not None and (
            after.kind == "ident" or after.text in ("*", "&", "(", ">", ",", "::")
        )

    def _template_argument_list(self) -> Node:
        kids = [self.leaf()]  # '<'
        depth = 1
        while self.peek() is not None and depth:
            if self.at("<"):
                depth += 1
                kids.append(self.leaf())
            elif self.at(">"):
                depth -= 1
                kids.append(self.leaf())
            elif self.at(">>"):
                depth -= 2
                kids.append(self.leaf())
            elif self.at_kind("ident"):
                kids.append(self.leaf("type_identifier"))
            elif self.at_kind("number"):
                kids.append(self.leaf("number_literal"))
            else:
                kids.append(self.leaf())
        return self._wrap("template_argument_list", kids)

    def _balanced(self, opener: str, closer: str) -> list[Node]:
        kids = [self.leaf()]
        depth = 1
        while self.peek() is not None and depth:
            if self.at(opener):
                depth += 1
            elif self.at(closer):
                depth -= 1
            kids.append(self.leaf())
        return kids

    def declarator(self) -> Node:
        if self.at("*"):
            star = self.leaf()
            return self._wrap("pointer_declarator", [star, self.declarator()])
        if self.at("&") or self.at("&&"):
            amp = self.leaf()
            return self._wrap("reference_declarator", [amp, self.declarator()])
        node = self._direct_declarator()
        return self._declarator_suffixes(node)

    def _direct_declarator(self) -> Node:
        if self.at("("):
            op = self.leaf()
            inner = self.declarator()
            cl = self.expect(")")
            kids = [op, inner] + ([cl] if cl else [])
            return self._wrap("parenthesized_declarator", kids)
        if self.at_kind("ident"):
            node = self.leaf("identifier")
            while self.at("::") and self.at_kind("ident", 1):
                sep = self.leaf()
                inner = self.leaf("identifier")
                node = self._wrap("qualified_identifier", [node, sep, inner])
            return node
        raise _ParseError(f"expected declarator at {self._where()}")

    def _declarator_suffixes(self, node: Node) -> Node:
        while True:
            if self.at("("):
                mark = self.pos
                try:
                    params = self.parameter_list()
                    node = self._wrap("function_declarator", [node, params])
                except _ParseError:
                    # Direct initialization: dim3 grid(2);
                    self.pos = mark
                    args = self.argument_list()
                    node = self._wrap("call_declarator", [node, args])
            elif self.at("["):
                op = self.leaf()
                kids = [node, op]
                if not self.at("]"):
                    kids.append(self.expression())
                cl = self.expect("]")
                if cl:
                    kids.append(cl)
                node = self._wrap("array_declarator", kids)
            else:
                return node

    def init_declarator_rest(self, decl: Node) -> Node:
        if self.at("="):
            eq = self.leaf()
            if self.at("{"):
                value = self.initializer_list()
            else:
                value = self.assignment_expression()
            return self._wrap("init_declarator", [decl, eq, value])
        if self.at("{"):  # brace initialization
            return self._wrap("init_declarator", [decl, self.initializer_list()])
        return decl

    def initializer_list(self) -> Node:
        kids = [self.leaf()]  # '{'
        while self.peek() is not None and not self.at("}"):
            if self.at("{"):
                kids.append(self.initializer_list())
            elif self.at(","):
                kids.append(self.leaf())
            else:
                kids.append(self.assignment_expression())
        cl = self.expect("}")
        if cl:
            kids.append(cl)
        return self._wrap("initializer_list", kids)

    def parameter_list(self) -> Node:
        kids = [self.leaf()]  # '('
        while self.peek() is not None and not self.at(")"):
            if self.at(","):
                kids.append(self.leaf())
                continue
            if self.at("..."):
                kids.append(self.leaf())
                continue
            if self.at("void") and self.at(")", 1):
                kids.append(self.leaf("primitive_type"))
                continue
            kids.append(self.parameter_declaration())
        cl = self.expect(")")
        if cl:
            kids.append(cl)
        return self._wrap("parameter_list", kids)

    def parameter_declaration(self) -> Node:
        specs = self.decl_specifiers()
        if not specs:
            # Unknown single-identifier type, e.g. "(T)" in a prototype.
            if self.at_kind("ident"):
                specs = [self.leaf("type_identifier")]
            else:
                raise _ParseError(f"bad parameter at {self._where()}")
        kids = list(specs)
        if not (self.at(",") or self.at(")")):
            decl = self.abstract_or_named_declarator()
            if decl is not None:
                if self.at("="):  # default argument
                    eq = self.leaf()
                    kids += [decl, eq, self.assignment_expression()]
                else:
                    kids.append(decl)
        return self._wrap("parameter_declaration", kids)

    def abstract_or_named_declarator(self) -> Node | None:
        if self.at("*"):
            star = self.leaf()
            inner = self.abstract_or_named_declarator()
            kids = [star] + ([inner] if inner else [])
            return self._wrap("pointer_declarator", kids)
        if self.at("&") or self.at("&&"):
            amp = self.leaf()
            inner = self.abstract_or_named_declarator()
            kids = [amp] + ([inner] if inner else [])
            return self._wrap("reference_declarator", kids)
        if self.at_kind("ident"):
            node = self.leaf("identifier")
            return self._declarator_suffixes(node)
        if self.at("["):
            return self._declarator_suffixes(Node("abstract_declarator", 0, 0))
        return None

    # -- statements -----------------------------------------------------------

    def compound_statement(self) -> Node:
        kids = [self.leaf()]  # '{'
        while self.peek() is not None and not self.at("}"):
            start = self.pos
            try:
                kids.append(self.statement())
            except _ParseError:
                kids.append(self._recover(start))
        cl = self.expect("}")
        if cl:
            kids.append(cl)
        return self._wrap("compound_statement", kids)

    def statement(self) -> Node:
        t = self.peek()
        if t is None:
            raise _ParseError("unexpected end of input")
        if t.kind == "preproc":
            return self.leaf("preproc_directive")
        text = t.text
        if text == "{":
            return self.compound_statement()
        if text == ";":
            return self.leaf()
        if text == "if":
            return self.if_statement()
        if text == "for":
            return self.for_statement()
        if text == "while":
            return self.while_statement()
        if text == "do":
            return self.do_statement()
        if text == "return":
            kids = [self.leaf()]
            if not self.at(";"):
                kids.append(self.expression())
            semi = self.expect(";")
            if semi:
                kids.append(semi)
            return self._wrap("return_statement", kids)
        if text in ("break", "continue"):
            kids = [self.leaf()]
            semi = self.expect(";")
            if semi:
                kids.append(semi)
            return self._wrap(f"{text}_statement", kids)
        if text == "switch":
            return self.switch_statement()
        if text in ("case", "default"):
            return self.case_statement()
        if text == "goto":
            kids = [self.leaf()]
            if self.at_kind("ident"):
                kids.append(self.leaf("identifier"))
            semi = self.expect(";")
            if semi:
                kids.append(semi)
            return self._wrap("goto_statement", kids)
        if self._looks_like_declaration():
            return self.declaration_or_function()
        expr = self.expression()
        semi = self.expect(";")
        kids = [expr] + ([semi] if semi else [])
        return self._wrap("expression_statement", kids)

    def _looks_like_declaration(self) -> bool:
        t = self.peek()
        if t is None:
            return False
        if t.text in QUALIFIERS or t.text in STORAGE or t.text in CUDA_QUALIFIERS:
            return True
        if t.text in PRIMITIVE_TYPES or t.text in ("struct", "union", "enum", "class"):
            return True
        if t.kind == "ident":
            return self._ident_is_type() and self._decl_shape_ahead()
        return False

    def _decl_shape_ahead(self) -> bool:
        """After `ident` that may be a type: allow `::ident` and template
        argument runs, then `(*|&)*` and the declared name, so `a * b;`
        stays an expression only when the shape disagrees."""
        k = 1
        while True:
            t = self.peek(k)
            if t is None:
                return False
            if t.text == "::" and self.at_kind("ident", k + 1):
                k += 2
                continue
            if t.text == "<":
                nxt = self._skip_angle(k)
                if nxt is None:
                    return False
                k = nxt
                continue
            break
        while True:
            t = self.peek(k)
            if t is None:
                return False
            if t.text in ("*", "&"):
                k += 1
                continue
            if t.kind == "ident":
                nxt = self.peek(k + 1)
                return nxt is not None and nxt.text in ("=", ",", ";", "[", "(", ")")
            return False

    def if_statement(self) -> Node:
        kids = [self.leaf()]
        kids.append(self._condition_clause())
        kids.append(self.statement())
        if self.at("else"):
            kids.append(self.leaf())
            kids.append(self.statement())
        return self._wrap("if_statement", kids)

    def _condition_clause(self) -> Node:
        op = self.expect("(")
        kids = [op] if op else []
        kids.append(self.expression())
        cl = self.expect(")")
        if cl:
            kids.append(cl)
        return self._wrap("condition_clause", kids)

    def while_statement(self) -> Node:
        kids = [self.leaf()]
        kids.append(self._condition_clause())
        kids.append(self.statement())
        return self._wrap("while_statement", kids)

    def do_statement(self) -> Node:
        kids = [self.leaf()]
        kids.append(self.statement())
        if self.at("while"):
            kids.append(self.leaf())
            kids.append(self._condition_clause())
        semi = self.expect(";")
        if semi:
            kids.append(semi)
        return self._wrap("do_statement", kids)

    def for_statement(self) -> Node:
        kids = [self.leaf()]
        op = self.expect("(")
        if op:
            kids.append(op)
        if self.at(";"):
            kids.append(self.leaf())
        elif self._looks_like_declaration():
            kids.append(self.declaration_or_function())
        else:
            kids.append(self.expression())
            semi = self.expect(";")
            if semi:
                kids.append(semi)
        if not self.at(";"):
            kids.append(self.expression())
        semi = self.expect(";")
        if semi:
            kids.append(semi)
        if not self.at(")"):
            kids.append(self.expression())
        cl = self.expect(")")
        if cl:
            kids.append(cl)
        kids.append(self.statement())
        return self._wrap("for_statement", kids)

    def switch_statement(self) -> Node:
        kids = [self.leaf()]
        kids.append(self._condition_clause())
        kids.append(self.statement())
        return self._wrap("switch_statement", kids)

    def case_statement(self) -> Node:
        kids = [self.leaf()]
        if kids[0].kind == "case":
            kids.append(self.expression())
        colon = self.expect(":")
        if colon:
            kids.append(colon)
        return self._wrap("case_statement", kids)

    # -- expressions ------------------------------------------------------------

    def expression(self) -> Node:
        node = self.assignment_expression()
        if not self.at(","):
            return node
        kids = [node]
        while self.at(","):
            kids.append(self.leaf())
            kids.append(self.assignment_expression())
        return self._wrap("comma_expression", kids)

    def assignment_expression(self) -> Node:
        left = self.conditional_expression()
        t = self.peek()
        if t is not None and t.text in _ASSIGN_OPS:
            op = self.leaf()
            right = self.assignment_expression()
            return self._wrap("assignment_expression", [left, op, right])
        return left

    def conditional_expression(self) -> Node:
        cond = self.binary_expression(0)
        if not self.at("?"):
            return cond
        q = self.leaf()
        then = self.expression()
        colon = self.expect(":")
        kids = [cond, q, then]
        if colon:
            kids.append(colon)
        kids.append(self.assignment_expression())
        return self._wrap("conditional_expression", kids)

    def binary_expression(self, level: int) -> Node:
        if level >= len(_BINARY_LEVELS):
            return self.unary_expression()
        node = self.binary_expression(level + 1)
        ops = _BINARY_LEVELS[level]
        while True:
            t = self.peek()
            if t is None or t.text not in ops:
                return node
            if t.text == ">" and self._at_statement_boundary_gt():
                return node
            op = self.leaf()
            right = self.binary_expression(level + 1)
            node = self._wrap("binary_expression", [node, op, right])

    def _at_statement_boundary_gt(self) -> bool:
        # '>' closing a template argument list is never followed by an
        # operand; cheap guard for rare mixed contexts.
        nxt = self.peek(1)
        return nxt is not None and nxt.text in (")", ";", ",", "}")

    def unary_expression(self) -> Node:
        t = self.peek()
        if t is None:
            raise _ParseError("expression expected at end of input")
        if t.text in ("*", "&"):
            op = self.leaf()
            operand = self.unary_expression()
            return self._wrap("pointer_expression", [op, operand])
        if t.text in _UNARY_OPS:
            op = self.leaf()
            operand = self.unary_expression()
            kind = "update_expression" if op.kind in ("++", "--") else "unary_expression"
            return self._wrap(kind, [op, operand])
        if t.text == "sizeof":
            op = self.leaf()
            if self.at("("):
                kids = [op, self.leaf()]
                nxt = self.peek()
                if nxt is not None and nxt.text in PRIMITIVE_TYPES:
                    while self.peek() is not None and self.peek().text in PRIMITIVE_TYPES:
                        kids.append(self.leaf("primitive_type"))
                    while self.at("*"):
                        kids.append(self.leaf())
                elif nxt is not None and nxt.text in ("struct", "union", "enum"):
                    kids.append(self.leaf())
                    if self.at_kind("ident"):
                        kids.append(self.leaf("type_identifier"))
                    while self.at("*"):
                        kids.append(self.leaf())
                elif not self.at(")"):
                    kids.append(self.expression())
                cl = self.expect(")")
                if cl:
                    kids.append(cl)
            else:
                kids = [op, self.unary_expression()]
            return self._wrap("sizeof_expression", kids)
        if t.text == "(" and self._cast_ahead():
            op = self.leaf()
            ty = self._cast_type()
            cl = self.expect(")")
            kids = [op, ty] + ([cl] if cl else [])
            kids.append(self.unary_expression())
            return self._wrap("cast_expression", kids)
        return self.postfix_expression()

    def _cast_ahead(self) -> bool:
        """Treat '(' as a cast only when its body is unmistakably a type."""
        k = 1
        saw_type = False
        saw_star = False
        while True:
            t = self.peek(k)
            if t is None:
                return False
            if t.text in PRIMITIVE_TYPES or t.text in QUALIFIERS or t.text in (
                "struct", "union", "enum",
            ):
                saw_type = True
            elif t.text == "*":
                saw_star = True
            elif t.kind == "ident":
                if not (saw_type or t.text.endswith("_t")):
                    return False
                saw_type = True
            elif t.text == ")":
                if not saw_type and not saw_star:
                    return False
                nxt = self.peek(k + 1)
                return nxt is not None and (
                    nxt.kind in ("ident", "number", "string", "char")
                    or nxt.text in ("(", "*", "&", "!", "~", "-", "+")
                )
            else:
                return False
            k += 1

    def _cast_type(self) -> Node:
        kids = []
        while self.peek() is not None and not self.at(")"):
            t = self.peek()
            if t.text in PRIMITIVE_TYPES:
                kids.append(self.leaf("primitive_type"))
            elif t.kind == "ident":
                kids.append(self.leaf("type_identifier"))
            elif t.text in QUALIFIERS:
                kids.append(self.leaf("type_qualifier"))
            else:
                kids.append(self.leaf())
        return self._wrap("type_descriptor", kids)

    def postfix_expression(self) -> Node:
        node = self.primary_expression()
        while True:
            if self.at("("):
                args = self.argument_list()
                node = self._wrap("call_expression", [node, args])
            elif self.at("["):
                op = self.leaf()
                idx = self.expression()
                cl = self.expect("]")
                kids = [node, op, idx] + ([cl] if cl else [])
                node = self._wrap("subscript_expression", kids)
            elif self.at(".") or self.at("->"):
                op = self.leaf()
                if self.at_kind("ident"):
                    field = self.leaf("field_identifier")
                    node = self._wrap("field_expression", [node, op, field])
                else:
                    node = self._wrap("field_expression", [node, op])
            elif self.at("++") or self.at("--"):
                op = self.leaf()
                node = self._wrap("update_expression", [node, op])
            elif self.at("<<<"):
                node = self.kernel_launch(node)
            elif (
                self.at("<")
                and node.kind in ("identifier", "qualified_identifier")
                and self._template_args_ahead(0)
            ):
                args = self._template_argument_list()
                node = self._wrap("template_call", [node, args])
            else:
                return node

    def kernel_launch(self, callee: Node) -> Node:
        kids = [callee, self.leaf()]  # '<<<'
        while self.peek() is not None and not self.at(">>>"):
            if self.at(","):
                kids.append(self.leaf())
            else:
                kids.append(self.assignment_expression())
        if self.at(">>>"):
            kids.append(self.leaf())
        if self.at("("):
            kids.append(self.argument_list())
        return self._wrap("kernel_launch", kids)

    def argument_list(self) -> Node:
        kids = [self.leaf()]  # '('
        while self.peek() is not None and not self.at(")"):
            if self.at(","):
                kids.append(self.leaf())
            else:
                kids.append(self.assignment_expression())
        cl = self.expect(")")
        if cl:
            kids.append(cl)
        return self._wrap("argument_list", kids)

    def primary_expression(self) -> Node:
        t = self.peek()
        if t is None:
            raise _ParseError("expression expected at end of input")
        if t.kind == "number":
            return self.leaf("number_literal")
        if t.kind == "string":
            node = self.leaf("string_literal")
            while self.at_kind("string"):
                nxt = self.leaf("string_literal")
                node = self._wrap("concatenated_string", [node, nxt])
            return node
        if t.kind == "char":
            return self.leaf("char_literal")
        if t.text == "(":
            op = self.leaf()
            inner = self.expression()
            cl = self.expect(")")
            kids = [op, inner] + ([cl] if cl else [])
            return self._wrap("parenthesized_expression", kids)
        if t.text == "{":
            return self.initializer_list()
        if t.kind == "ident":
            node = self.leaf("identifier")
            while self.at("::") and (self.at_kind("ident", 1) or self.peek(1) is None):
                sep = self.leaf()
                if self.at_kind("ident"):
                    inner = self.leaf("identifier")
                    node = self._wrap("qualified_identifier", [node, sep, inner])
                else:
                    node = self._wrap("qualified_identifier", [node, sep])
            return node
        raise _ParseError(f"unexpected token {t.text!r} at offset {t.start}")

    # -- small helpers -----------------------------------------------------------

    @staticmethod
    def _wrap(kind: str, kids: list[Node]) -> Node:
        kids = [k for k in kids if k is not None]
        if not kids:
            return Node(kind, 0, 0)
        return Node(kind, kids[0].start, kids[-1].end, kids)


def parse_c_family(source: str, cuda: bool = False) -> Node:
    return CParser(source, cuda=cuda).parse()
