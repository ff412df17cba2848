"""Compile checks, error classification, and rule-based repair.

The error taxonomy has five categories; the first three have mechanical
fixes and the last two do not:

- undefined_generic_T: a single-capital-letter type used without its
  template declaration; fixed by prepending ``template <typename T>``.
- missing_variable_init: a scalar read but never declared anywhere in its
  function; fixed by appending it as a trailing ``int`` parameter.
- missing_braces: unclosed delimiters at end of input; fixed by appending
  the missing closers.
- wrong_function_call: a call to a name no declaration covers.
- nontrivial: everything else.

Classification is a deterministic cascade in that order and total over
error results. Repairs are idempotent: a source the rule finds nothing to
fix in comes back unchanged.
"""

from __future__ import annotations

import re
import shutil
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from forge.compilebench.adapters import CompilerAdapter
from forge.errors import CompilerMissing, CompileTimeout, NotAnError, Unrepairable
from forge.metrics.codebleu import dataflow_events, iter_scopes
from forge.profiles import load_keywords
from forge.syntax import is_parse_failure, iter_leaves, iter_nodes, parse_source
from forge.syntax.clexer import lex

CATEGORIES = (
    "undefined_generic_T",
    "missing_variable_init",
    "missing_braces",
    "wrong_function_call",
    "nontrivial",
)
REPAIRABLE_CATEGORIES = CATEGORIES[:3]

_OPENERS = {"(": ")", "[": "]", "{": "}"}
_CLOSERS = {v: k for k, v in _OPENERS.items()}

# Messages that name an undefined identifier, across nvcc, gcc, and clang.
_UNDEFINED_PATTERNS = (
    re.compile(r'identifier "(\w+)" is undefined'),
    re.compile(r"'(\w+)' was not declared"),
    re.compile(r"'(\w+)' has not been declared"),
    re.compile(r"'(\w+)' does not name a type"),
    re.compile(r"use of undeclared identifier '(\w+)'"),
)

_BRACE_MESSAGE = re.compile(r"expected '\}'|extraneous '\}'|expected '\)'")
_CALL_MESSAGE = re.compile(r"no matching function|too few arguments|too many arguments")

# Library names the static checks treat as declared even without a header.
_KNOWN_VALUES = frozenset(
    "true false nullptr NULL std this size_t M_PI EOF stdout stderr stdin".split()
)
_KNOWN_CALLABLES = frozenset(
    (
        "printf fprintf sprintf snprintf malloc calloc free memcpy memset "
        "strlen strcmp abs labs min max sqrt sqrtf cbrt cbrtf fabs fabsf "
        "exp expf exp2 log logf log2 log10 pow powf sin sinf cos cosf tan "
        "tanf floor floorf ceil ceilf round fmod fmodf fma fmaf rsqrt rsqrtf "
        "isnan isinf assert exit"
    ).split()
)
_KNOWN_TYPES = frozenset(
    (
        "size_t ssize_t ptrdiff_t intptr_t uintptr_t int8_t int16_t int32_t "
        "int64_t uint8_t uint16_t uint32_t uint64_t uint string vector map "
        "set pair FILE ostream istream"
    ).split()
)


@dataclass(frozen=True)
class CompileResult:
    doc_id: str
    status: str  # "ok" | "error"
    diagnostics: tuple  # of (line, column, message)
    compiler: str
    elapsed: float


@dataclass(frozen=True)
class RepairOutcome:
    doc_id: str
    category: str
    fixes_applied: tuple
    fixed_source: str
    post_status: str  # "ok" | "error"

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "category": self.category,
            "fixes_applied": list(self.fixes_applied),
            "fixed_source": self.fixed_source,
            "post_status": self.post_status,
        }


@dataclass(frozen=True)
class AccuracyReport:
    total: int
    compiled: int
    accuracy: float  # percent
    histogram: dict  # category -> count over initially failing docs
    outcomes: list  # RepairOutcome per initially failing doc, input order

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "compiled": self.compiled,
            "accuracy": self.accuracy,
            "histogram": dict(self.histogram),
            "outcomes": [outcome.to_json() for outcome in self.outcomes],
        }


def _known_names(language: str) -> frozenset:
    names = set(load_keywords("cpp")) | _KNOWN_VALUES
    if language == "cuda":
        names |= set(load_keywords("cuda"))
    return frozenset(names)


def _line_col(source: str, offset: int) -> tuple:
    line_start = source.rfind("\n", 0, offset) + 1
    return source.count("\n", 0, offset) + 1, offset - line_start + 1


# -- static analyses shared by the stub and the repair rules ---------------------


def undeclared_variables(source: str, language: str) -> list:
    """Names read somewhere but defined nowhere, excluding known builtins.

    Flow- and scope-insensitive on purpose: any definition anywhere in the
    file counts. Meaningless under Fortran's implicit typing, so empty.
    """
    if language == "fortran":
        return []
    root = parse_source(source, language)
    known = _known_names(language)
    defs: set = set()
    uses: set = set()
    for scope in iter_scopes(root):
        for mode, name in dataflow_events(scope, source, language):
            (defs if mode == "def" else uses).add(name)
    return sorted(uses - defs - known)


def _declared_type_names(root, source: str) -> set:
    declared = set()
    for node in iter_nodes(root):
        if node.kind in ("class_specifier", "enum_specifier", "type_parameter_declaration"):
            for child in node.children:
                if child.is_leaf and child.kind == "type_identifier":
                    declared.add(child.text(source))
        elif node.kind in ("type_definition", "alias_declaration"):
            names = [
                c for c in node.children if c.is_leaf and c.kind in ("identifier", "type_identifier")
            ]
            if node.kind == "type_definition" and names:
                declared.add(names[-1].text(source))
            elif len(names) >= 2:
                declared.add(names[1].text(source))
    return declared


def _type_uses(root, source: str) -> list:
    """(name, offset) for every type_identifier outside qualified names."""
    out = []

    def walk(node):
        if node.kind == "qualified_identifier":
            return
        if node.is_leaf:
            if node.kind == "type_identifier":
                out.append((node.text(source), node.start))
            return
        for child in node.children:
            walk(child)

    walk(root)
    return out


def undeclared_type_letters(source: str, language: str) -> list:
    """Single-capital-letter type names with no declaration in the file."""
    root = parse_source(source, language)
    declared = _declared_type_names(root, source) | _KNOWN_TYPES
    found = {
        name
        for name, _ in _type_uses(root, source)
        if len(name) == 1 and name.isupper() and name not in declared
    }
    return sorted(found)


def _function_head_name(declarator, source: str):
    for leaf in iter_leaves(declarator.children[0]):
        if leaf.kind in ("identifier", "field_identifier"):
            last = leaf
    try:
        return last.text(source)
    except UnboundLocalError:
        return None


def _declared_functions(root, source: str) -> set:
    names = set()
    for node in iter_nodes(root):
        if node.kind == "function_declarator" and node.children:
            name = _function_head_name(node, source)
            if name:
                names.add(name)
    return names


def _unclosed_delimiters(source: str) -> tuple:
    """(pending_closers, stray_closer_offset). Pending closers are what to
    append, innermost last; a stray closer makes the source unappendable."""
    stack = []
    stray = None
    for tok in lex(source):
        if tok.kind != "punct":
            continue
        if tok.text in _OPENERS:
            stack.append(tok.text)
        elif tok.text in _CLOSERS:
            if stack and stack[-1] == _CLOSERS[tok.text]:
                stack.pop()
            elif stray is None:
                stray = tok.start
    return "".join(_OPENERS[d] for d in reversed(stack)), stray


# -- compilation -------------------------------------------------------------------


def compile_source(source: str, adapter: CompilerAdapter, doc_id: str = "") -> CompileResult:
    if adapter.builtin:
        return _stub_compile(source, adapter, doc_id)
    started = time.perf_counter()
    executable = adapter.command[0]
    if shutil.which(executable) is None:
        raise CompilerMissing(f"{executable!r} not found on PATH")
    text = source
    if adapter.prelude:
        text = adapter.prelude + '\n#line 1 "input"\n' + source
    with tempfile.TemporaryDirectory(prefix="forge-compile-") as workdir:
        path = Path(workdir) / f"unit{adapter.source_suffix}"
        path.write_text(text, encoding="utf-8")
        command = [part.replace("{source}", str(path)) for part in adapter.command]
        try:
            proc = subprocess.run(
                command,
                capture_output=True,
                text=True,
                timeout=adapter.timeout_s,
                check=False,
            )
        except subprocess.TimeoutExpired as exc:
            raise CompileTimeout(
                f"{executable} exceeded {adapter.timeout_s:.0f}s on {doc_id or 'input'}"
            ) from exc
    elapsed = time.perf_counter() - started
    output = proc.stderr + "\n" + proc.stdout
    diagnostics = []
    if proc.returncode != 0:
        for match in re.finditer(adapter.error_pattern, output, re.M):
            groups = match.groupdict()
            diagnostics.append(
                (
                    int(groups.get("line") or 0),
                    int(groups.get("column") or 0),
                    (groups.get("message") or "").strip(),
                )
            )
        if not diagnostics:
            first = next((l for l in output.splitlines() if l.strip()), "")
            diagnostics.append((0, 0, first or f"compiler exited {proc.returncode}"))
    status = "ok" if proc.returncode == 0 else "error"
    return CompileResult(doc_id, status, tuple(diagnostics), adapter.name, elapsed)


def _stub_compile(source: str, adapter: CompilerAdapter, doc_id: str) -> CompileResult:
    started = time.perf_counter()
    diagnostics = []
    if adapter.language == "fortran":
        if is_parse_failure(parse_source(source, "fortran")):
            diagnostics.append((1, 1, "unclassifiable syntax error"))
    else:
        pending, stray = _unclosed_delimiters(source)
        if pending:
            line, column = _line_col(source, max(len(source) - 1, 0))
            diagnostics.append(
                (line, column, f"expected '{pending[0]}' at end of input")
            )
        elif stray is not None:
            line, column = _line_col(source, stray)
            diagnostics.append((line, column, f"extraneous '{source[stray]}'"))
        else:
            diagnostics.extend(_stub_name_checks(source, adapter.language))
    diagnostics.sort()
    status = "ok" if not diagnostics else "error"
    return CompileResult(
        doc_id, status, tuple(diagnostics), adapter.name, time.perf_counter() - started
    )


def _stub_name_checks(source: str, language: str) -> list:
    root = parse_source(source, language)
    known = _known_names(language)
    declared_types = _declared_type_names(root, source) | _KNOWN_TYPES | known
    declared_functions = _declared_functions(root, source) | _KNOWN_CALLABLES | known
    diagnostics = []

    for name, offset in _type_uses(root, source):
        if name not in declared_types:
            line, column = _line_col(source, offset)
            diagnostics.append((line, column, f'identifier "{name}" is undefined'))

    offsets = _identifier_offsets(root, source)
    for name in undeclared_variables(source, language):
        line, column = _line_col(source, offsets.get(name, 0))
        diagnostics.append((line, column, f'identifier "{name}" is undefined'))

    for node in iter_nodes(root):
        if node.kind in ("call_expression", "kernel_launch") and node.children:
            head = node.children[0]
            if head.is_leaf and head.kind == "identifier":
                name = head.text(source)
                if name not in declared_functions:
                    line, column = _line_col(source, head.start)
                    diagnostics.append(
                        (line, column, f"no matching function for call to '{name}'")
                    )
    return diagnostics


def _identifier_offsets(root, source: str) -> dict:
    offsets: dict = {}
    for leaf in iter_leaves(root):
        if leaf.kind == "identifier":
            offsets.setdefault(leaf.text(source), leaf.start)
    return offsets


# -- classification ------------------------------------------------------------------


def _ascii_quotes(text: str) -> str:
    """Fold the curly quotes gcc localizes diagnostics with to ASCII."""
    return (
        text.replace("‘", "'")
        .replace("’", "'")
        .replace("“", '"')
        .replace("”", '"')
    )


def _undefined_names(result: CompileResult) -> set:
    names = set()
    for _, _, message in result.diagnostics:
        message = _ascii_quotes(message)
        for pattern in _UNDEFINED_PATTERNS:
            names.update(pattern.findall(message))
    return names


def _called_names(source: str) -> set:
    """Identifiers immediately followed by '(' in the token stream."""
    toks = [t for t in lex(source) if t.kind not in ("comment", "preproc")]
    return {
        tok.text
        for tok, nxt in zip(toks, toks[1:])
        if tok.kind == "ident" and nxt.kind == "punct" and nxt.text == "("
    }


def classify_error(result: CompileResult, source: str) -> str:
    """Deterministic cascade over the five categories; total for errors."""
    if result.status == "ok":
        raise NotAnError(f"{result.doc_id or 'result'} compiled cleanly")
    undefined = _undefined_names(result)
    called = _called_names(source)
    if any(len(name) == 1 and name.isupper() for name in undefined):
        return "undefined_generic_T"
    if undefined - called:
        return "missing_variable_init"
    pending, stray = _unclosed_delimiters(source)
    messages = _ascii_quotes(" ".join(m for _, _, m in result.diagnostics))
    if pending or stray is not None or _BRACE_MESSAGE.search(messages):
        return "missing_braces"
    if undefined & called or _CALL_MESSAGE.search(messages):
        return "wrong_function_call"
    return "nontrivial"


# -- repair ---------------------------------------------------------------------------


def _enclosing_function(root, offset: int):
    best = None
    for node in iter_nodes(root):
        if node.kind == "function_definition" and node.start <= offset < node.end:
            best = node
    return best


def _repair_generic_type(source: str, language: str) -> str:
    letters = undeclared_type_letters(source, language)
    if not letters:
        return source
    root = parse_source(source, language)
    first_use = min(
        offset
        for name, offset in _type_uses(root, source)
        if name in letters
    )
    function = _enclosing_function(root, first_use)
    anchor = function.start if function is not None else first_use
    line_start = source.rfind("\n", 0, anchor) + 1
    params = ", ".join(f"typename {name}" for name in letters)
    return source[:line_start] + f"template <{params}>\n" + source[line_start:]


def _repair_missing_parameters(source: str, language: str) -> str:
    missing = undeclared_variables(source, language)
    if not missing:
        return source
    root = parse_source(source, language)
    offsets = _identifier_offsets(root, source)
    # Group the new parameters by the function whose body reads them.
    by_function: dict = {}
    for name in missing:
        function = _enclosing_function(root, offsets.get(name, 0))
        if function is None:
            continue
        by_function.setdefault(id(function), (function, []))[1].append(name)
    insertions = []
    for function, names in by_function.values():
        closer = _parameter_list_closer(function, source)
        if closer is None:
            continue
        empty = source[function.start : closer].rstrip().endswith("(")
        text = ", ".join(f"int {name}" for name in names)
        insertions.append((closer, text if empty else ", " + text))
    for offset, text in sorted(insertions, reverse=True):
        source = source[:offset] + text + source[offset:]
    return source


def _parameter_list_closer(function, source: str):
    for node in iter_nodes(function):
        if node.kind == "parameter_list" and node.children:
            last = node.children[-1]
            if last.is_leaf and last.kind == ")":
                return last.start
    return None


def _repair_braces(source: str) -> str:
    pending, _ = _unclosed_delimiters(source)
    if not pending:
        return source
    return source + pending + "\n"


def repair(source: str, category: str, language: str = "cuda") -> str:
    """Apply the mechanical fix for a repairable category.

    Finding nothing to fix returns the source unchanged, which makes every
    rule idempotent.
    """
    if category == "undefined_generic_T":
        return _repair_generic_type(source, language)
    if category == "missing_variable_init":
        return _repair_missing_parameters(source, language)
    if category == "missing_braces":
        return _repair_braces(source)
    raise Unrepairable(f"no rule-based fix for category {category!r}")


_RULE_IDS = {
    "undefined_generic_T": "prepend_template",
    "missing_variable_init": "append_parameter",
    "missing_braces": "append_closers",
}


# -- corpus accuracy ---------------------------------------------------------------------


def compilation_accuracy(
    docs,
    adapter: CompilerAdapter,
    with_repair: bool,
    jobs: int = 1,
) -> AccuracyReport:
    """Compile every (doc_id, source) pair, optionally repairing failures.

    Per-document compile timeouts count as failures; they never abort the
    corpus run. A missing compiler does abort: nothing could be measured.
    """
    docs = list(docs)

    def check(item):
        doc_id, source = item
        try:
            result = compile_source(source, adapter, doc_id=doc_id)
        except CompileTimeout as exc:
            result = CompileResult(doc_id, "error", ((0, 0, str(exc)),), adapter.name, 0.0)
        if result.status == "ok":
            return True, None
        category = classify_error(result, source)
        fixed = source
        fixes = ()
        post = "error"
        if with_repair and category in REPAIRABLE_CATEGORIES:
            fixed = repair(source, category, adapter.language)
            if fixed != source:
                fixes = (_RULE_IDS[category],)
                try:
                    post = compile_source(fixed, adapter, doc_id=doc_id).status
                except CompileTimeout:
                    post = "error"
        outcome = RepairOutcome(doc_id, category, fixes, fixed, post)
        return post == "ok", outcome

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            checked = list(pool.map(check, docs))
    else:
        checked = [check(item) for item in docs]

    outcomes = [outcome for _, outcome in checked if outcome is not None]
    histogram: dict = {}
    for outcome in outcomes:
        histogram[outcome.category] = histogram.get(outcome.category, 0) + 1
    compiled = sum(1 for ok, _ in checked if ok)
    accuracy = 100.0 * compiled / len(docs) if docs else 0.0
    return AccuracyReport(
        total=len(docs),
        compiled=compiled,
        accuracy=accuracy,
        histogram=histogram,
        outcomes=outcomes,
    )
