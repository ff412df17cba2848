"""Compile-check, error classification, and rule-based repair.

The three fixture kernels reproduce the common failure shapes the repair
rules exist for: a generic type used without its template declaration, a
size variable read but never declared, and a dropped closing brace. The
stub adapter exercises classification and the source transforms without
external tools; a real compiler run is included when g++ is present.
"""

import shutil

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.compilebench import (
    CompileResult,
    CompilerAdapter,
    REPAIRABLE_CATEGORIES,
    classify_error,
    compilation_accuracy,
    compile_source,
    load_adapter,
    repair,
    stub_adapter,
    undeclared_variables,
)
from forge.errors import CompilerMissing, NotAnError, Unrepairable

VALID_KERNEL = """__global__ void scale(float *x, int n, float a) {
    int i = blockIdx.x * blockDim.x + threadIdx.x;
    if (i < n) {
        x[i] = a * x[i];
    }
}
"""

FIXTURE_GENERIC_TYPE = """__global__ void set_valid_mask_gpu(const T *score, T score_thr, int *valid_mask, int dims) {
    int tid = blockIdx.x * blockDim.x + threadIdx.x;
    if (tid < dims) {
        if (score[tid] > score_thr) {
            valid_mask[tid] = 1;
        } else {
            valid_mask[tid] = 0;
        }
    }
}
"""

FIXTURE_MISSING_PARAM = """__global__ void get_ev(double *old_arr, double *new_arr) {
    int tid = blockIdx.x * blockDim.x + threadIdx.x;
    if (tid < size) {
        new_arr[tid] = old_arr[tid];
    }
}
"""

FIXTURE_MISSING_BRACE = """__global__ void copy_block(float *dst, const float *src, int n) {
    int i = blockIdx.x * blockDim.x + threadIdx.x;
    if (i < n) {
        dst[i] = src[i];
    }
"""

FIXTURE_WRONG_CALL = """__global__ void bump(int *c) {
    atomicAdds(c, 1);
}
"""


def stub_compile(source, doc_id="d"):
    return compile_source(source, stub_adapter("cuda"), doc_id=doc_id)


# -- stub compilation ---------------------------------------------------------


def test_stub_accepts_valid_kernel():
    result = stub_compile(VALID_KERNEL)
    assert result.status == "ok"
    assert result.diagnostics == ()


def test_stub_reports_undefined_type():
    result = stub_compile(FIXTURE_GENERIC_TYPE)
    assert result.status == "error"
    assert any('"T" is undefined' in m for _, _, m in result.diagnostics)


def test_stub_reports_undefined_variable():
    result = stub_compile(FIXTURE_MISSING_PARAM)
    assert result.status == "error"
    assert any('"size" is undefined' in m for _, _, m in result.diagnostics)


def test_stub_reports_unbalanced_braces():
    result = stub_compile(FIXTURE_MISSING_BRACE)
    assert result.status == "error"
    assert any("expected" in m and "}" in m for _, _, m in result.diagnostics)


def test_stub_reports_unknown_callee():
    result = stub_compile(FIXTURE_WRONG_CALL)
    assert result.status == "error"
    assert any("no matching function" in m for _, _, m in result.diagnostics)


def test_stub_ok_result_invariant():
    # status ok exactly when no diagnostics carry error severity
    for source in (VALID_KERNEL, FIXTURE_GENERIC_TYPE, FIXTURE_MISSING_BRACE):
        result = stub_compile(source)
        assert (result.status == "ok") == (not result.diagnostics)


# -- undeclared-variable analysis -------------------------------------------------


def test_undeclared_variables_finds_size():
    assert undeclared_variables(FIXTURE_MISSING_PARAM, "cuda") == ["size"]


def test_undeclared_variables_ignores_builtins_and_params():
    assert undeclared_variables(VALID_KERNEL, "cuda") == []


def test_undeclared_variables_multiple_sorted():
    src = "void f(int *x) { x[0] = lo + hi; }"
    assert undeclared_variables(src, "cpp") == ["hi", "lo"]


# -- classification ------------------------------------------------------------------


def classify(source):
    result = stub_compile(source)
    return classify_error(result, source)


def test_classification_of_fixtures():
    assert classify(FIXTURE_GENERIC_TYPE) == "undefined_generic_T"
    assert classify(FIXTURE_MISSING_PARAM) == "missing_variable_init"
    assert classify(FIXTURE_MISSING_BRACE) == "missing_braces"
    assert classify(FIXTURE_WRONG_CALL) == "wrong_function_call"


def test_classification_requires_an_error():
    with pytest.raises(NotAnError):
        classify_error(stub_compile(VALID_KERNEL), VALID_KERNEL)


def test_classification_falls_back_to_nontrivial():
    result = CompileResult(
        doc_id="d",
        status="error",
        diagnostics=((3, 1, "ambiguous overload for operator+"),),
        compiler="stub",
        elapsed=0.0,
    )
    assert classify_error(result, "int x;") == "nontrivial"


def test_generic_type_wins_over_other_undefined_names():
    # Cascade order: an undefined T outranks a co-occurring undefined scalar.
    src = FIXTURE_GENERIC_TYPE.replace("tid < dims", "tid < size")
    assert classify(src) == "undefined_generic_T"


# -- repair transforms ----------------------------------------------------------------


def test_repair_generic_type_prepends_template_line():
    fixed = repair(FIXTURE_GENERIC_TYPE, "undefined_generic_T")
    assert fixed == "template <typename T>\n" + FIXTURE_GENERIC_TYPE
    assert stub_compile(fixed).status == "ok"


def test_repair_missing_param_appends_parameter():
    fixed = repair(FIXTURE_MISSING_PARAM, "missing_variable_init")
    want_signature = "__global__ void get_ev(double *old_arr, double *new_arr, int size) {"
    assert fixed.splitlines()[0] == want_signature
    assert fixed.splitlines()[1:] == FIXTURE_MISSING_PARAM.splitlines()[1:]
    assert stub_compile(fixed).status == "ok"


def test_repair_missing_brace_appends_brace():
    fixed = repair(FIXTURE_MISSING_BRACE, "missing_braces")
    assert fixed == FIXTURE_MISSING_BRACE + "}\n"
    assert stub_compile(fixed).status == "ok"


def test_repair_is_idempotent_on_fixtures():
    for source, category in (
        (FIXTURE_GENERIC_TYPE, "undefined_generic_T"),
        (FIXTURE_MISSING_PARAM, "missing_variable_init"),
        (FIXTURE_MISSING_BRACE, "missing_braces"),
    ):
        once = repair(source, category)
        assert repair(once, category) == once


def test_repair_rejects_unrepairable_categories():
    for category in ("wrong_function_call", "nontrivial"):
        with pytest.raises(Unrepairable):
            repair(FIXTURE_WRONG_CALL, category)
    with pytest.raises(Unrepairable):
        repair(VALID_KERNEL, "not_a_category")


def brace_depth(source):
    from forge.syntax.clexer import lex

    depth = 0
    for tok in lex(source):
        if tok.kind == "punct":
            depth += (tok.text == "{") - (tok.text == "}")
    return depth


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 6), st.integers(0, 3))
def test_brace_repair_balances_any_truncation(levels, cut):
    source = "void f() " + "{ if (x) ".join([""] * (levels + 1)) + "{ y = 1; " + "}" * (
        levels + 1
    )
    truncated = source.rstrip("}") + "}" * max(0, levels + 1 - cut)
    fixed = repair(truncated, "missing_braces")
    assert brace_depth(fixed) == 0
    assert fixed.startswith(truncated.rstrip("\n"))


def test_brace_repair_ignores_braces_in_literals():
    src = 'void f() { const char *s = "{{{"; // }\n'
    fixed = repair(src, "missing_braces")
    assert brace_depth(fixed) == 0
    assert fixed.count("}") - src.count("}") == 1


# -- accuracy -----------------------------------------------------------------------


def docs(*sources):
    return [(f"doc{i}", s) for i, s in enumerate(sources)]


def test_accuracy_all_valid_is_100():
    report = compilation_accuracy(
        docs(VALID_KERNEL, VALID_KERNEL), stub_adapter("cuda"), with_repair=False
    )
    assert report.accuracy == pytest.approx(100.0)
    assert report.histogram == {}


def test_accuracy_repair_fixes_the_fixture_corpus():
    corpus = docs(FIXTURE_GENERIC_TYPE, FIXTURE_MISSING_PARAM, FIXTURE_MISSING_BRACE)
    adapter = stub_adapter("cuda")
    without = compilation_accuracy(corpus, adapter, with_repair=False)
    with_repair = compilation_accuracy(corpus, adapter, with_repair=True)
    assert without.accuracy == pytest.approx(0.0)
    assert with_repair.accuracy == pytest.approx(100.0)
    assert with_repair.histogram == {
        "undefined_generic_T": 1,
        "missing_variable_init": 1,
        "missing_braces": 1,
    }


def test_accuracy_repair_never_hurts():
    corpus = docs(
        VALID_KERNEL, FIXTURE_GENERIC_TYPE, FIXTURE_WRONG_CALL, FIXTURE_MISSING_BRACE
    )
    adapter = stub_adapter("cuda")
    without = compilation_accuracy(corpus, adapter, with_repair=False)
    with_repair = compilation_accuracy(corpus, adapter, with_repair=True)
    assert with_repair.accuracy >= without.accuracy
    assert with_repair.total == without.total == 4


def test_accuracy_outcomes_record_fixes():
    report = compilation_accuracy(
        docs(FIXTURE_MISSING_PARAM), stub_adapter("cuda"), with_repair=True
    )
    outcome = report.outcomes[0]
    assert outcome.category == "missing_variable_init"
    assert outcome.fixes_applied
    assert outcome.fixed_source != FIXTURE_MISSING_PARAM
    assert outcome.post_status == "ok"


def test_accuracy_unrepairable_keeps_original():
    report = compilation_accuracy(
        docs(FIXTURE_WRONG_CALL), stub_adapter("cuda"), with_repair=True
    )
    outcome = report.outcomes[0]
    assert outcome.category == "wrong_function_call"
    assert outcome.fixes_applied == ()
    assert outcome.fixed_source == FIXTURE_WRONG_CALL
    assert outcome.post_status == "error"


def test_accuracy_parallel_matches_serial():
    corpus = docs(VALID_KERNEL, FIXTURE_GENERIC_TYPE, FIXTURE_MISSING_BRACE)
    adapter = stub_adapter("cuda")
    serial = compilation_accuracy(corpus, adapter, with_repair=True, jobs=1)
    parallel = compilation_accuracy(corpus, adapter, with_repair=True, jobs=3)
    assert serial.accuracy == parallel.accuracy
    assert [o.doc_id for o in serial.outcomes] == [o.doc_id for o in parallel.outcomes]


# -- adapters and real compilers -------------------------------------------------------


def test_load_adapter_ships_configs():
    for name in ("cpp", "cuda", "nvcc", "fortran"):
        adapter = load_adapter(name)
        assert isinstance(adapter, CompilerAdapter)
        assert adapter.command
        assert adapter.timeout_s > 0


def test_load_adapter_env_override(monkeypatch):
    monkeypatch.setenv("FORGE_CPP_BIN", "/opt/toolchain/g++")
    adapter = load_adapter("cpp")
    assert adapter.command[0] == "/opt/toolchain/g++"


def test_missing_compiler_raises(tmp_path):
    adapter = CompilerAdapter(
        name="ghost",
        language="cpp",
        command=("/nonexistent/compiler", "{source}"),
        error_pattern=r"error: (?P<message>.*)",
    )
    with pytest.raises(CompilerMissing):
        compile_source("int main() { return 0; }", adapter)


needs_gxx = pytest.mark.skipif(shutil.which("g++") is None, reason="g++ not on PATH")


@needs_gxx
def test_gxx_compiles_valid_cpp():
    result = compile_source(
        "int add(int a, int b) { return a + b; }\n", load_adapter("cpp"), doc_id="ok"
    )
    assert result.status == "ok"
    assert result.elapsed > 0


@needs_gxx
def test_gxx_reports_structured_diagnostics():
    result = compile_source("int f() { return x; }\n", load_adapter("cpp"))
    assert result.status == "error"
    line, column, message = result.diagnostics[0]
    assert line == 1
    assert column > 0
    assert "x" in message


@needs_gxx
def test_gxx_cuda_prelude_compiles_kernels():
    adapter = load_adapter("cuda")
    assert compile_source(VALID_KERNEL, adapter).status == "ok"
    assert compile_source(FIXTURE_MISSING_PARAM, adapter).status == "error"


@needs_gxx
def test_gxx_repairs_fixtures_end_to_end():
    adapter = load_adapter("cuda")
    for source, category in (
        (FIXTURE_GENERIC_TYPE, "undefined_generic_T"),
        (FIXTURE_MISSING_PARAM, "missing_variable_init"),
        (FIXTURE_MISSING_BRACE, "missing_braces"),
    ):
        broken = compile_source(source, adapter)
        assert broken.status == "error"
        assert classify_error(broken, source) == category
        assert compile_source(repair(source, category), adapter).status == "ok"


def test_repairable_categories_constant():
    assert REPAIRABLE_CATEGORIES == (
        "undefined_generic_T",
        "missing_variable_init",
        "missing_braces",
    )
