"""Role classification, context traversal and example emission tests."""

from __future__ import annotations

import pytest

from romeo import (
    FunctionDisassembly,
    ObjectDisassembly,
    ParseError,
    Role,
    SymbolEntry,
    SymbolTable,
    build_context,
    classify_role,
    compute_roles,
    emit_examples,
    parse_testcase_meta,
    strip_support_stubs,
)
from romeo.disasm import Instruction, SymbolRef
from romeo.transform import Locality, make_locality


class TestClassifyRole:
    @pytest.mark.parametrize(
        "name,role",
        [
            ("CWE191_Integer_Underflow__int_sub_42_bad", Role.PRIMARY_BAD),
            ("CWE191_Integer_Underflow__int_sub_42_good", Role.PRIMARY_GOOD),
            ("CWE191_Integer_Underflow__int_sub_42_goodB2GSink", Role.SECONDARY_GOOD),
            ("goodG2B", Role.SECONDARY_GOOD),
            ("goodB2G1", Role.SECONDARY_GOOD),
            ("goodG2BSource", Role.SECONDARY_GOOD),
            ("good2", Role.SECONDARY_GOOD),
            ("bad", Role.PRIMARY_BAD),
            ("badSource", Role.SUPPORT),
            ("badSink", Role.SUPPORT),
            ("printf", Role.SUPPORT),
            ("printIntLine", Role.SUPPORT),
            ("main", Role.SUPPORT),
            ("CWE762_Mismatched__delete_42::bad()", Role.PRIMARY_BAD),
            ("CWE762_Mismatched__delete_42::good()", Role.PRIMARY_GOOD),
            ("CWE762_Mismatched__delete_42::goodG2B()", Role.SECONDARY_GOOD),
        ],
    )
    def test_default_conventions(self, name, role):
        assert classify_role(name) is role


class TestTestcaseMeta:
    def test_multifile_variant(self):
        meta = parse_testcase_meta("CWE191_Integer_Underflow__int_sub_62a")
        assert (meta.cwe, meta.flow_variant) == (191, 62)

    def test_long_functional_variant(self):
        meta = parse_testcase_meta(
            "CWE121_Stack_Based_Buffer_Overflow__dest_char_alloca_cpy_01"
        )
        assert (meta.cwe, meta.flow_variant) == (121, 1)

    def test_digits_inside_variant_name(self):
        meta = parse_testcase_meta("CWE401_Memory_Leak__int64_t_calloc_12")
        assert (meta.cwe, meta.flow_variant) == (401, 12)

    def test_filename_extension_stripped(self):
        meta = parse_testcase_meta("CWE191_Integer_Underflow__int_sub_01.dis")
        assert meta.testcase_id == "CWE191_Integer_Underflow__int_sub_01"

    def test_non_matching_name_is_error(self):
        with pytest.raises(ParseError) as err:
            parse_testcase_meta("README")
        assert "README" in str(err.value)


def _fn(name, callees=()):
    """Function skeleton with one synthetic call per callee, for graph tests."""
    instructions = []
    addr = 0x1000
    for callee in callees:
        instructions.append(
            Instruction(addr, "call", (f"{addr:x} <{callee}>",), SymbolRef(callee))
        )
        addr += 5
    instructions.append(Instruction(addr, "ret"))
    return FunctionDisassembly(name, ".text", 0x1000, tuple(instructions), tuple(dict.fromkeys(callees)))


def _obj(testcase_id, fns, undefined=("printf",)):
    entries = [SymbolEntry(f.name, True, ".text") for f in fns]
    entries += [SymbolEntry(u, False, None) for u in undefined]
    return ObjectDisassembly(testcase_id, tuple(fns), SymbolTable.from_entries(entries))


class TestStripStubs:
    def test_stub_removed(self):
        obj = _obj("CWE191_X__int_sub_01", [_fn("good3"), _fn("keep")])
        stripped = strip_support_stubs(obj)
        assert [f.name for f in stripped.functions] == ["keep"]

    def test_without_stubs_unchanged(self):
        obj = _obj("CWE191_X__int_sub_01", [_fn("keep")])
        assert strip_support_stubs(obj) is obj

    def test_empty_object(self):
        obj = _obj("CWE191_X__int_sub_01", [])
        assert strip_support_stubs(obj).functions == ()


class TestBuildContext:
    def test_linear_chain_with_external_leaf(self):
        sink = _fn("badSink", ["printf"])
        bad = _fn("CWE191_X__int_sub_42_bad", ["badSink"])
        obj = _obj("CWE191_X__int_sub_42", [bad, sink])
        roles = compute_roles(obj)
        ctx = build_context(bad, obj, roles)
        assert [f.name for f in ctx] == ["badSink"]

    def test_good_focal_excludes_bad_subtree(self):
        # 5-node graph: goodB2G -> helper -> bad -> badSource; helper also -> printLine
        bad_source = _fn("badSource")
        bad = _fn("CWE191_X__int_sub_42_bad", ["badSource"])
        print_line = _fn("printLine", ["printf"])
        helper = _fn("helper", ["CWE191_X__int_sub_42_bad", "printLine"])
        good = _fn("goodB2G", ["helper"])
        obj = _obj("CWE191_X__int_sub_42", [bad, bad_source, print_line, helper, good])
        roles = compute_roles(obj)
        ctx = [f.name for f in build_context(good, obj, roles)]
        assert ctx == ["helper", "printLine"]
        # and symmetrically, a bad focal never sees good-role functions
        ctx_bad = [f.name for f in build_context(bad, obj, roles)]
        assert ctx_bad == ["badSource"]

    def test_recursive_self_call(self):
        fn = _fn("goodG2B", ["goodG2B"])
        obj = _obj("CWE191_X__int_sub_01", [fn])
        assert build_context(fn, obj, compute_roles(obj)) == ()

    def test_cycle_terminates(self):
        a = _fn("helperA", ["helperB"])
        b = _fn("helperB", ["helperA"])
        focal = _fn("goodG2B", ["helperA"])
        obj = _obj("CWE191_X__int_sub_01", [focal, a, b])
        ctx = [f.name for f in build_context(focal, obj, compute_roles(obj))]
        assert ctx == ["helperA", "helperB"]

    def test_exclusion_list_respected(self):
        main = _fn("main", ["printLine"])
        print_line = _fn("printLine")
        focal = _fn("goodG2B", ["main"])
        obj = _obj("CWE191_X__int_sub_01", [focal, main, print_line])
        ctx = build_context(focal, obj, compute_roles(obj))
        # main is boilerplate: excluded, and not traversed through
        assert ctx == ()


def _emit(obj, with_context=True):
    from romeo import build_scramble_table
    from romeo.pipeline import referenced_symbols

    meta = parse_testcase_meta(obj.testcase_id)
    locality = make_locality(obj.symbols)
    symbols = referenced_symbols(obj)
    local_symbols = {s for s in symbols if locality(s) is Locality.LOCAL}
    table = build_scramble_table(
        local_symbols, obj.testcase_id, seed=5, forbidden=frozenset(symbols - local_symbols)
    )
    return emit_examples(obj, meta, table, with_context, locality=locality), table


class TestEmitExamples:
    def _mini_object(self):
        sink = _fn("badSink", ["printf"])
        bad = _fn("CWE191_X__int_sub_42_bad", ["badSink"])
        good_sink = _fn("goodG2BSink", ["printf"])
        good_helper = _fn("goodG2B", ["goodG2BSink"])
        good_entry = _fn("CWE191_X__int_sub_42_good", ["goodG2B"])
        main = _fn("main", ["CWE191_X__int_sub_42_good", "CWE191_X__int_sub_42_bad"])
        return _obj(
            "CWE191_X__int_sub_42",
            [bad, sink, good_sink, good_helper, good_entry, main],
        )

    def test_emission_counts_and_labels(self):
        examples, _ = _emit(self._mini_object())
        labels = sorted(e.label_binary for e in examples)
        assert labels == ["bad", "good", "good"]
        # one per secondary-good + primary-bad; primary good and support absent
        assert len(examples) == 3

    def test_primary_good_never_emitted(self):
        examples, table = _emit(self._mini_object())
        good_entry_name = table.mapping["CWE191_X__int_sub_42_good"]
        for example in examples:
            assert not example.focal_text.startswith(f"!{good_entry_name}:")

    def test_context_flag_clears_context_only(self):
        with_ctx, _ = _emit(self._mini_object(), with_context=True)
        without_ctx, _ = _emit(self._mini_object(), with_context=False)
        assert len(with_ctx) == len(without_ctx)
        for a, b in zip(with_ctx, without_ctx):
            assert a.focal_text == b.focal_text
            assert b.context_text == ""
        assert any(a.context_text for a in with_ctx)

    def test_label_matches_context_membership(self):
        examples, table = _emit(self._mini_object())
        bad_names = {table.mapping["CWE191_X__int_sub_42_bad"], table.mapping["badSink"]}
        good_names = {
            table.mapping["goodG2B"],
            table.mapping["goodG2BSink"],
            table.mapping["CWE191_X__int_sub_42_good"],
        }
        for example in examples:
            headers = {
                line[1:-1]
                for line in example.context_text.split("\n")
                if line.startswith("!") and line.endswith(":")
            }
            if example.label_binary == "good":
                assert not headers & bad_names
            else:
                assert not headers & good_names

    def test_no_admissible_functions(self):
        obj = _obj("CWE191_X__int_sub_01", [_fn("printLine", ["printf"])])
        examples, _ = _emit(obj)
        assert examples == []

    def test_flow01_leaf_functions_have_empty_context(self):
        bad = _fn("CWE191_X__int_sub_01_bad", ["printf"])
        good = _fn("goodG2B", ["printf"])
        obj = _obj("CWE191_X__int_sub_01", [bad, good])
        examples, _ = _emit(obj, with_context=True)
        assert len(examples) == 2
        assert all(e.context_text == "" for e in examples)
