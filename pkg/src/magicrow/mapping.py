"""Mapping-file front end: parse SIMPLER-style crossbar mappings into an
execution plan and validate them against the MAGIC write discipline.

Input format (JSON object):

    "Row size": 5                  -- number of devices on the row (columns)
    "Number of Gates": 5           -- declared NOT+NOR count (redundant, checked)
    "Inputs": "{A(0),B(1)}"        -- signal bindings, name(device-index)
    "Outputs": "{S(4),Cy(2)}"
    "Reuse cycles": 1              -- declared count of mid-sequence Init steps
    "Execution sequence": {"T0": <micro-op>, "T1": ..., ...}

Micro-op grammar (one string per cycle):

    Init{item(,item)*}             -- SET the listed devices to logic 1
    name(index)=inv1{item}         -- MAGIC NOT
    name(index)=nor2{item,item}    -- MAGIC NOR

    item := ['] name(index) [']    -- single quotes are optional but must balance

Cycle labels must be dense from T0 (T0, T1, ... with no gaps); the numeric
suffix, not JSON key order, fixes execution order.

Validation walks the sequence and reports `PlanViolation` records instead of
raising: MAGIC requires every gate output to have been Init'd after its most
recent prior write, every operand to be a plan input or an earlier gate
result, and in-place operand overwrites are impossible electrically.
Count mismatches against the declared header fields are warnings (the fields
are redundant with the sequence); everything else is fatal for downstream
scheduling.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Union


class MappingError(Exception):
    """Base class for mapping-file problems."""


class PlanParseError(MappingError):
    """Malformed JSON. Carries the character offset of the failure."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class GrammarError(MappingError):
    """A micro-op string does not match the grammar."""


class SchemaError(MappingError):
    """Structurally valid JSON that violates the mapping schema."""


class PlanBoundsError(MappingError):
    """A device index is outside the declared row size (IndexOutOfRange)."""


@dataclass(frozen=True)
class SignalRef:
    """A named signal bound to one device (column) on the row."""

    name: str
    device: int


@dataclass(frozen=True)
class InitOp:
    targets: tuple[SignalRef, ...]


@dataclass(frozen=True)
class NotOp:
    input: SignalRef
    output: SignalRef


@dataclass(frozen=True)
class NorOp:
    input_a: SignalRef
    input_b: SignalRef
    output: SignalRef


MicroOp = Union[InitOp, NotOp, NorOp]


def op_operands(op: MicroOp) -> tuple[SignalRef, ...]:
    """Signals the op reads (empty for Init)."""
    if isinstance(op, NotOp):
        return (op.input,)
    if isinstance(op, NorOp):
        return (op.input_a, op.input_b)
    return ()


def op_output(op: MicroOp):
    """Signal the op writes, or None for Init."""
    if isinstance(op, (NotOp, NorOp)):
        return op.output
    return None


@dataclass(frozen=True)
class ExecutionPlan:
    """Validated-shape IR of one mapping: the whole row program."""

    row_size: int
    num_gates: int
    inputs: tuple[SignalRef, ...]
    outputs: tuple[SignalRef, ...]
    reuse_cycles: int
    sequence: tuple[tuple[str, MicroOp], ...]

    @property
    def gate_count(self) -> int:
        """NOT+NOR ops actually present in the sequence."""
        return sum(1 for _, op in self.sequence if not isinstance(op, InitOp))

    @property
    def not_count(self) -> int:
        return sum(1 for _, op in self.sequence if isinstance(op, NotOp))

    @property
    def nor_count(self) -> int:
        return sum(1 for _, op in self.sequence if isinstance(op, NorOp))

    @property
    def reinit_count(self) -> int:
        """Init ops after the first sequence entry (cell-reuse cycles)."""
        return sum(
            1 for i, (_, op) in enumerate(self.sequence) if i > 0 and isinstance(op, InitOp)
        )

    @property
    def input_devices(self) -> tuple[int, ...]:
        return tuple(s.device for s in self.inputs)

    @property
    def output_devices(self) -> tuple[int, ...]:
        return tuple(s.device for s in self.outputs)


class ViolationKind(str, Enum):
    INDEX_OUT_OF_RANGE = "IndexOutOfRange"
    OUTPUT_NOT_INITIALIZED = "OutputNotInitialized"
    OPERAND_UNDEFINED = "OperandUndefined"
    OPERAND_IS_OUTPUT = "OperandIsOutput"
    COUNT_MISMATCH = "CountMismatch"
    OUTPUT_NEVER_WRITTEN = "OutputNeverWritten"


# CountMismatch is advisory (header fields are redundant with the sequence);
# every other kind makes the plan unschedulable.
WARNING_KINDS = frozenset({ViolationKind.COUNT_MISMATCH})


@dataclass(frozen=True)
class PlanViolation:
    cycle_label: str
    kind: ViolationKind
    detail: str

    @property
    def is_warning(self) -> bool:
        return self.kind in WARNING_KINDS

    def __str__(self):
        where = f" at {self.cycle_label}" if self.cycle_label else ""
        return f"{self.kind.value}{where}: {self.detail}"


_ITEM_RE = re.compile(r"\s*(')?\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(\s*([0-9]+)\s*\)\s*(')?\s*\Z")
_CALL_RE = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\{(.*)\}\s*\Z", re.DOTALL)
_LABEL_RE = re.compile(r"T([0-9]+)\Z")


def _parse_item(text: str) -> SignalRef:
    m = _ITEM_RE.match(text)
    if m is None:
        raise GrammarError(f"bad operand {text.strip()!r}: expected name(index)")
    if (m.group(1) or "") != (m.group(4) or ""):
        raise GrammarError(f"unbalanced quotes in operand {text.strip()!r}")
    return SignalRef(m.group(2), int(m.group(3)))


def _split_items(body: str, context: str) -> list[SignalRef]:
    if "{" in body or "}" in body:
        raise GrammarError(f"unbalanced braces in {context!r}")
    parts = body.split(",")
    if parts == [""]:
        raise GrammarError(f"empty operand list in {context!r}")
    return [_parse_item(p) for p in parts]


def parse_micro_op(text: str) -> MicroOp:
    """Parse one execution-sequence entry into a micro-op.

    Raises GrammarError on anything outside the three productions.
    """
    s = text.strip()
    if "=" in s:
        lhs, _, rhs = s.partition("=")
        out = _parse_item(lhs)
        m = _CALL_RE.match(rhs)
        if m is None:
            raise GrammarError(f"expected mnemonic{{...}} after '=' in {s!r}")
        mnemonic, body = m.group(1), m.group(2)
        items = _split_items(body, s)
        if mnemonic == "inv1":
            if len(items) != 1:
                raise GrammarError(f"inv1 takes 1 operand, got {len(items)} in {s!r}")
            return NotOp(input=items[0], output=out)
        if mnemonic == "nor2":
            if len(items) != 2:
                raise GrammarError(f"nor2 takes 2 operands, got {len(items)} in {s!r}")
            return NorOp(input_a=items[0], input_b=items[1], output=out)
        raise GrammarError(f"unknown op mnemonic {mnemonic!r} in {s!r}")

    m = _CALL_RE.match(s)
    if m is None:
        raise GrammarError(f"unrecognized micro-op {s!r}")
    mnemonic, body = m.group(1), m.group(2)
    if mnemonic in ("inv1", "nor2"):
        raise GrammarError(f"{mnemonic} needs an output target: name(index)={mnemonic}{{...}}")
    if mnemonic != "Init":
        raise GrammarError(f"unknown op mnemonic {mnemonic!r} in {s!r}")
    items = _split_items(body, s)
    devices = [it.device for it in items]
    if len(set(devices)) != len(devices):
        raise GrammarError(f"duplicate Init target device in {s!r}")
    return InitOp(targets=tuple(items))


def render_micro_op(op: MicroOp) -> str:
    """Canonical (unquoted) text for a micro-op; parse_micro_op round-trips it."""
    if isinstance(op, InitOp):
        return "Init{" + ",".join(f"{t.name}({t.device})" for t in op.targets) + "}"
    if isinstance(op, NotOp):
        return f"{op.output.name}({op.output.device})=inv1{{{op.input.name}({op.input.device})}}"
    a, b, o = op.input_a, op.input_b, op.output
    return f"{o.name}({o.device})=nor2{{{a.name}({a.device}),{b.name}({b.device})}}"


def _parse_signal_set(text: str, field_name: str) -> tuple[SignalRef, ...]:
    s = text.strip()
    if s in ("", "{}"):
        return ()
    if not (s.startswith("{") and s.endswith("}")):
        raise SchemaError(f"{field_name!r} must look like '{{A(0),B(1)}}', got {text!r}")
    try:
        items = _split_items(s[1:-1], text)
    except GrammarError as e:
        raise SchemaError(f"bad {field_name!r} entry: {e}") from e
    return tuple(items)


def _check_bounds(label: str, refs, row_size: int):
    for ref in refs:
        if not (0 <= ref.device < row_size):
            raise PlanBoundsError(
                f"IndexOutOfRange at {label}: device {ref.device} of signal "
                f"{ref.name!r} >= row size {row_size}"
            )


def parse_plan(json_text: str) -> ExecutionPlan:
    """Parse a mapping JSON document into an ExecutionPlan.

    The sequence is ordered by the numeric suffix of the T-labels regardless
    of JSON key order; labels must be dense from T0. Device indices are
    checked against "Row size" here, so a returned plan never references a
    column off the row.
    """
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise PlanParseError(f"malformed JSON at offset {e.pos}: {e.msg}", offset=e.pos) from e
    if not isinstance(doc, dict):
        raise SchemaError("mapping document must be a JSON object")

    for key in ("Row size", "Execution sequence"):
        if key not in doc:
            raise SchemaError(f"missing required key {key!r}")
    row_size = doc["Row size"]
    if not isinstance(row_size, int) or isinstance(row_size, bool) or row_size < 1:
        raise SchemaError(f"'Row size' must be a positive integer, got {row_size!r}")
    seq_obj = doc["Execution sequence"]
    if not isinstance(seq_obj, dict):
        raise SchemaError("'Execution sequence' must be an object of 'Tk' -> micro-op")

    indexed = []
    for label, entry in seq_obj.items():
        m = _LABEL_RE.match(label)
        if m is None:
            raise SchemaError(f"bad cycle label {label!r}: expected 'T<number>'")
        if not isinstance(entry, str):
            raise SchemaError(f"cycle {label}: micro-op must be a string")
        indexed.append((int(m.group(1)), label, entry))
    indexed.sort(key=lambda t: t[0])
    for pos, (t_idx, label, _) in enumerate(indexed):
        if t_idx != pos:
            raise SchemaError(
                f"cycle labels must be dense from T0: found {label} at position {pos}"
            )

    sequence = []
    for _, label, entry in indexed:
        try:
            op = parse_micro_op(entry)
        except GrammarError as e:
            raise GrammarError(f"cycle {label}: {e}") from e
        _check_bounds(label, op_operands(op), row_size)
        out = op_output(op)
        if out is not None:
            _check_bounds(label, (out,), row_size)
        if isinstance(op, InitOp):
            _check_bounds(label, op.targets, row_size)
        sequence.append((label, op))

    inputs = _parse_signal_set(str(doc.get("Inputs", "")), "Inputs")
    outputs = _parse_signal_set(str(doc.get("Outputs", "")), "Outputs")
    _check_bounds("Inputs", inputs, row_size)
    _check_bounds("Outputs", outputs, row_size)
    if len(set(s.device for s in inputs)) != len(inputs):
        raise SchemaError("input devices must be pairwise distinct")
    if len(set(s.device for s in outputs)) != len(outputs):
        raise SchemaError("output devices must be pairwise distinct")

    plan = ExecutionPlan(
        row_size=row_size,
        num_gates=0,
        inputs=inputs,
        outputs=outputs,
        reuse_cycles=0,
        sequence=tuple(sequence),
    )
    num_gates = doc.get("Number of Gates", plan.gate_count)
    reuse = doc.get("Reuse cycles", plan.reinit_count)
    if not isinstance(num_gates, int) or isinstance(num_gates, bool):
        raise SchemaError(f"'Number of Gates' must be an integer, got {num_gates!r}")
    if not isinstance(reuse, int) or isinstance(reuse, bool):
        raise SchemaError(f"'Reuse cycles' must be an integer, got {reuse!r}")
    return ExecutionPlan(
        row_size=row_size,
        num_gates=num_gates,
        inputs=inputs,
        outputs=outputs,
        reuse_cycles=reuse,
        sequence=tuple(sequence),
    )


def validate_plan(plan: ExecutionPlan) -> list[PlanViolation]:
    """Check the MAGIC write discipline over the whole sequence.

    Returns an empty list iff the plan is clean. Violations are data, not
    exceptions; use `is_warning` to separate advisory count mismatches from
    fatal problems.

    Rules walked per gate:
      * the output device must have been Init'd after its most recent prior
        write (plan-input devices never count as initialized: gates must not
        write input devices);
      * every operand device must be a plan input or an earlier gate result;
      * an operand may not double as the op's own output.
    Plus whole-plan checks: every plan output written at least once, declared
    gate/reuse counts match the sequence, all indices on the row.
    """
    violations = []

    def refs_of(op):
        out = op_output(op)
        extra = (out,) if out is not None else ()
        targets = op.targets if isinstance(op, InitOp) else ()
        return (*op_operands(op), *extra, *targets)

    for label, op in plan.sequence:
        for ref in refs_of(op):
            if not (0 <= ref.device < plan.row_size):
                violations.append(
                    PlanViolation(
                        label,
                        ViolationKind.INDEX_OUT_OF_RANGE,
                        f"device {ref.device} of {ref.name!r} >= row size {plan.row_size}",
                    )
                )
    for field_name, refs in (("Inputs", plan.inputs), ("Outputs", plan.outputs)):
        for ref in refs:
            if not (0 <= ref.device < plan.row_size):
                violations.append(
                    PlanViolation(
                        field_name,
                        ViolationKind.INDEX_OUT_OF_RANGE,
                        f"device {ref.device} of {ref.name!r} >= row size {plan.row_size}",
                    )
                )
    if violations:
        # Index errors poison the set-based walk below; report them alone.
        return violations

    input_devices = set(plan.input_devices)
    defined = set(input_devices)  # readable: plan inputs or earlier gate results
    initialized: set[int] = set()  # Init'd since last write
    written: set[int] = set()

    for label, op in plan.sequence:
        if isinstance(op, InitOp):
            initialized |= set(t.device for t in op.targets) - input_devices
            continue
        operands = op_operands(op)
        out = op_output(op)
        if out.device in set(o.device for o in operands):
            violations.append(
                PlanViolation(
                    label,
                    ViolationKind.OPERAND_IS_OUTPUT,
                    f"output {out.name!r}({out.device}) is also an operand; "
                    "MAGIC cannot overwrite an input in place",
                )
            )
        for o in operands:
            if o.device not in defined:
                violations.append(
                    PlanViolation(
                        label,
                        ViolationKind.OPERAND_UNDEFINED,
                        f"operand {o.name!r}({o.device}) is neither a plan input "
                        "nor an earlier gate result",
                    )
                )
        if out.device not in initialized:
            detail = (
                f"output {out.name!r}({out.device}) is a plan input device; "
                "gates must not write input devices"
                if out.device in input_devices
                else f"output {out.name!r}({out.device}) was not Init'd since its last write"
            )
            violations.append(PlanViolation(label, ViolationKind.OUTPUT_NOT_INITIALIZED, detail))
        initialized.discard(out.device)
        defined.add(out.device)
        written.add(out.device)

    for ref in plan.outputs:
        if ref.device not in written:
            violations.append(
                PlanViolation(
                    "Outputs",
                    ViolationKind.OUTPUT_NEVER_WRITTEN,
                    f"plan output {ref.name!r}({ref.device}) is never written by a gate",
                )
            )

    if plan.num_gates != plan.gate_count:
        violations.append(
            PlanViolation(
                "",
                ViolationKind.COUNT_MISMATCH,
                f"'Number of Gates' declares {plan.num_gates} but sequence has {plan.gate_count}",
            )
        )
    if plan.reuse_cycles != plan.reinit_count:
        violations.append(
            PlanViolation(
                "",
                ViolationKind.COUNT_MISMATCH,
                f"'Reuse cycles' declares {plan.reuse_cycles} but sequence has "
                f"{plan.reinit_count} mid-sequence Init steps",
            )
        )
    return violations


def fatal_violations(violations: list[PlanViolation]) -> list[PlanViolation]:
    return [v for v in violations if not v.is_warning]


def make_plan(
    row_size: int,
    inputs: tuple[SignalRef, ...],
    outputs: tuple[SignalRef, ...],
    sequence,
    num_gates: int | None = None,
    reuse_cycles: int | None = None,
) -> ExecutionPlan:
    """Build a plan programmatically; counts default to the derived values."""
    seq = tuple(sequence)
    probe = ExecutionPlan(row_size, 0, tuple(inputs), tuple(outputs), 0, seq)
    return ExecutionPlan(
        row_size=row_size,
        num_gates=probe.gate_count if num_gates is None else num_gates,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        reuse_cycles=probe.reinit_count if reuse_cycles is None else reuse_cycles,
        sequence=seq,
    )


def plan_to_json(plan: ExecutionPlan) -> str:
    """Serialize a plan back to the mapping-file format."""
    doc = {
        "Row size": plan.row_size,
        "Number of Gates": plan.num_gates,
        "Inputs": "{" + ",".join(f"{s.name}({s.device})" for s in plan.inputs) + "}",
        "Outputs": "{" + ",".join(f"{s.name}({s.device})" for s in plan.outputs) + "}",
        "Reuse cycles": plan.reuse_cycles,
        "Execution sequence": {label: render_micro_op(op) for label, op in plan.sequence},
    }
    return json.dumps(doc, indent=1)
