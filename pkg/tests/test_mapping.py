import json

import pytest
from hypothesis import given, strategies as st

from magicrow import fixtures
from magicrow.mapping import (
    ExecutionPlan,
    GrammarError,
    InitOp,
    NorOp,
    NotOp,
    PlanBoundsError,
    PlanParseError,
    SchemaError,
    SignalRef,
    ViolationKind,
    fatal_violations,
    make_plan,
    parse_micro_op,
    parse_plan,
    plan_to_json,
    render_micro_op,
    validate_plan,
)

HALF_ADDER = fixtures.half_adder_text()


class TestMicroOpGrammar:
    def test_nor(self):
        op = parse_micro_op("Cy(2)=nor2{n6_(3),n5_(4)}")
        assert op == NorOp(
            input_a=SignalRef("n6_", 3),
            input_b=SignalRef("n5_", 4),
            output=SignalRef("Cy", 2),
        )

    def test_init_quoted(self):
        op = parse_micro_op("Init{'D(2)','D(3)','D(4)'}")
        assert op == InitOp(
            targets=(SignalRef("D", 2), SignalRef("D", 3), SignalRef("D", 4))
        )

    def test_not(self):
        op = parse_micro_op("n5_(4)=inv1{A(0)}")
        assert op == NotOp(input=SignalRef("A", 0), output=SignalRef("n5_", 4))

    def test_mixed_quote_styles(self):
        assert parse_micro_op("Init{n5_(4),n6_(3)}") == parse_micro_op(
            "Init{'n5_(4)','n6_(3)'}"
        )

    def test_whitespace_tolerated(self):
        op = parse_micro_op("  Cy( 2 ) = nor2 { n6_(3) ,  n5_(4) } ")
        assert op == parse_micro_op("Cy(2)=nor2{n6_(3),n5_(4)}")

    @pytest.mark.parametrize(
        "text",
        [
            "Cy(2)=nor2{n6_(3),n5_(4)",  # missing closing brace
            "Cy(2)=nor2 n6_(3),n5_(4)}",  # missing opening brace
            "Cy(2)=nor2{n6_(3)}",  # wrong arity
            "n5_(4)=inv1{A(0),B(1)}",  # wrong arity
            "Cy(2)=xor2{n6_(3),n5_(4)}",  # unknown mnemonic
            "Cy(x)=nor2{n6_(3),n5_(4)}",  # non-integer index
            "Cy(2)=nor2{'n6_(3),n5_(4)}",  # unbalanced quote
            "Init{}",  # empty target list
            "Init{'D(2)','D(2)'}",  # duplicate target device
            "inv1{A(0)}",  # gate without output target
            "n5_(4=inv1{A(0)}",  # unbalanced parens
        ],
    )
    def test_grammar_errors(self, text):
        with pytest.raises(GrammarError):
            parse_micro_op(text)

    def test_error_names_offending_substring(self):
        with pytest.raises(GrammarError, match="xor2"):
            parse_micro_op("Cy(2)=xor2{a(0),b(1)}")


_names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,6}", fullmatch=True)
_refs = st.builds(SignalRef, name=_names, device=st.integers(0, 99))
_ops = st.one_of(
    st.lists(st.integers(0, 99), min_size=1, max_size=6, unique=True).flatmap(
        lambda devs: st.tuples(*[_names for _ in devs]).map(
            lambda names: InitOp(
                targets=tuple(SignalRef(n, d) for n, d in zip(names, devs))
            )
        )
    ),
    st.builds(NotOp, input=_refs, output=_refs),
    st.builds(NorOp, input_a=_refs, input_b=_refs, output=_refs),
)


@given(_ops)
def test_render_parse_round_trip(op):
    assert parse_micro_op(render_micro_op(op)) == op


class TestParsePlan:
    def test_half_adder(self):
        plan = parse_plan(HALF_ADDER)
        assert plan.row_size == 5
        assert plan.num_gates == 5
        assert plan.inputs == (SignalRef("A", 0), SignalRef("B", 1))
        assert plan.outputs == (SignalRef("S", 4), SignalRef("Cy", 2))
        assert plan.reuse_cycles == 1
        assert [label for label, _ in plan.sequence] == [f"T{i}" for i in range(7)]

    def test_minimal(self):
        plan = parse_plan('{"Row size":1,"Execution sequence":{}}')
        assert plan.sequence == ()
        assert plan.inputs == ()
        assert plan.outputs == ()
        assert plan.num_gates == 0
        assert plan.reuse_cycles == 0

    def test_index_out_of_range(self):
        text = HALF_ADDER.replace("n5_(4)=inv1{A(0)}", "n5_(9)=inv1{A(0)}")
        with pytest.raises(PlanBoundsError, match=r"IndexOutOfRange.*9"):
            parse_plan(text)

    def test_malformed_json_has_offset(self):
        with pytest.raises(PlanParseError) as exc:
            parse_plan('{"Row size": 5,,}')
        assert exc.value.offset is not None

    @pytest.mark.parametrize("key", ["Row size", "Execution sequence"])
    def test_missing_required_key(self, key):
        doc = json.loads(HALF_ADDER)
        del doc[key]
        with pytest.raises(SchemaError, match=key):
            parse_plan(json.dumps(doc))

    def test_grammar_error_names_cycle_label(self):
        text = HALF_ADDER.replace("n5_(4)=inv1{A(0)}", "n5_(4)=bogus{A(0)}")
        with pytest.raises(GrammarError, match="T1"):
            parse_plan(text)

    def test_label_gap_rejected(self):
        doc = json.loads(HALF_ADDER)
        seq = doc["Execution sequence"]
        seq["T9"] = seq.pop("T6")
        with pytest.raises(SchemaError, match="dense"):
            parse_plan(json.dumps(doc))

    def test_key_order_irrelevant(self):
        doc = json.loads(HALF_ADDER)
        seq = doc["Execution sequence"]
        doc["Execution sequence"] = dict(reversed(list(seq.items())))
        assert parse_plan(json.dumps(doc)) == parse_plan(HALF_ADDER)

    def test_duplicate_input_devices_rejected(self):
        doc = json.loads(HALF_ADDER)
        doc["Inputs"] = "{A(0),B(0)}"
        with pytest.raises(SchemaError, match="distinct"):
            parse_plan(json.dumps(doc))

    def test_plan_json_round_trip(self):
        plan = parse_plan(HALF_ADDER)
        assert parse_plan(plan_to_json(plan)) == plan


class TestValidatePlan:
    def test_half_adder_clean(self, half_adder):
        assert validate_plan(half_adder) == []

    def test_output_not_initialized(self):
        plan = make_plan(
            row_size=3,
            inputs=(SignalRef("A", 0), SignalRef("B", 1)),
            outputs=(SignalRef("S", 2),),
            sequence=[("T0", parse_micro_op("S(2)=nor2{A(0),B(1)}"))],
        )
        kinds = [v.kind for v in validate_plan(plan)]
        assert kinds == [ViolationKind.OUTPUT_NOT_INITIALIZED]

    def test_operand_is_output(self):
        plan = make_plan(
            row_size=2,
            inputs=(SignalRef("A", 0), SignalRef("B", 1)),
            outputs=(SignalRef("S", 0),),
            sequence=[
                ("T0", parse_micro_op("Init{'S(0)'}")),
                ("T1", parse_micro_op("S(0)=nor2{A(0),B(1)}")),
            ],
        )
        kinds = {v.kind for v in validate_plan(plan)}
        assert ViolationKind.OPERAND_IS_OUTPUT in kinds

    def test_operand_undefined(self):
        plan = make_plan(
            row_size=3,
            inputs=(SignalRef("A", 0),),
            outputs=(SignalRef("S", 2),),
            sequence=[
                ("T0", parse_micro_op("Init{'S(2)'}")),
                ("T1", parse_micro_op("S(2)=nor2{A(0),ghost(1)}")),
            ],
        )
        kinds = [v.kind for v in validate_plan(plan)]
        assert kinds == [ViolationKind.OPERAND_UNDEFINED]

    def test_init_does_not_make_operand_defined(self):
        plan = make_plan(
            row_size=3,
            inputs=(SignalRef("A", 0),),
            outputs=(SignalRef("S", 2),),
            sequence=[
                ("T0", parse_micro_op("Init{'S(2)','x(1)'}")),
                ("T1", parse_micro_op("S(2)=nor2{A(0),x(1)}")),
            ],
        )
        kinds = [v.kind for v in validate_plan(plan)]
        assert kinds == [ViolationKind.OPERAND_UNDEFINED]

    def test_output_never_written(self):
        plan = make_plan(
            row_size=3,
            inputs=(SignalRef("A", 0),),
            outputs=(SignalRef("S", 2), SignalRef("T", 1)),
            sequence=[
                ("T0", parse_micro_op("Init{'S(2)'}")),
                ("T1", parse_micro_op("S(2)=inv1{A(0)}")),
            ],
        )
        kinds = [v.kind for v in validate_plan(plan)]
        assert kinds == [ViolationKind.OUTPUT_NEVER_WRITTEN]

    def test_gate_writing_input_device_flagged(self):
        plan = make_plan(
            row_size=2,
            inputs=(SignalRef("A", 0), SignalRef("B", 1)),
            outputs=(SignalRef("B", 1),),
            sequence=[
                ("T0", parse_micro_op("Init{'B(1)'}")),
                ("T1", parse_micro_op("B(1)=inv1{A(0)}")),
            ],
        )
        kinds = {v.kind for v in validate_plan(plan)}
        assert ViolationKind.OUTPUT_NOT_INITIALIZED in kinds

    def test_count_mismatch_is_warning(self, half_adder):
        plan = ExecutionPlan(
            row_size=half_adder.row_size,
            num_gates=half_adder.num_gates + 1,
            inputs=half_adder.inputs,
            outputs=half_adder.outputs,
            reuse_cycles=half_adder.reuse_cycles,
            sequence=half_adder.sequence,
        )
        violations = validate_plan(plan)
        assert [v.kind for v in violations] == [ViolationKind.COUNT_MISMATCH]
        assert all(v.is_warning for v in violations)
        assert fatal_violations(violations) == []

    def test_reuse_mismatch_reported(self, half_adder):
        plan = ExecutionPlan(
            row_size=half_adder.row_size,
            num_gates=half_adder.num_gates,
            inputs=half_adder.inputs,
            outputs=half_adder.outputs,
            reuse_cycles=0,
            sequence=half_adder.sequence,
        )
        assert [v.kind for v in validate_plan(plan)] == [ViolationKind.COUNT_MISMATCH]

    def test_index_out_of_range_on_constructed_plan(self):
        plan = make_plan(
            row_size=2,
            inputs=(),
            outputs=(),
            sequence=[("T0", InitOp(targets=(SignalRef("D", 5),)))],
        )
        assert [v.kind for v in validate_plan(plan)] == [ViolationKind.INDEX_OUT_OF_RANGE]


class TestListingCensus:
    def test_reinit_count_matches_reuse(self, half_adder):
        assert half_adder.reinit_count == half_adder.reuse_cycles == 1

    def test_gate_counts(self, half_adder):
        assert half_adder.not_count == 2
        assert half_adder.nor_count == 3
        assert half_adder.not_count + half_adder.nor_count == 5 == half_adder.num_gates


def test_generated_plans_validate_clean():
    import numpy as np

    rng = np.random.default_rng(123)
    for _ in range(50):
        plan = fixtures.random_valid_plan(rng, max_devices=32, max_cycles=40)
        assert fatal_violations(validate_plan(plan)) == []
