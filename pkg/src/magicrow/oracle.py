"""Golden logic-level model of an execution plan, and the harness comparing
it against simulated runs.

The emulator applies the plan's own semantics and nothing electrical:
devices power up at 0, inputs load the pattern, Init forces 1, NOT/NOR
write the complement/joint-complement. It refuses to read a device that
was never loaded, initialized or written instead of guessing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .mapping import ExecutionPlan, InitOp, NorOp, NotOp, op_operands, op_output
from .schedule import InputPattern
from .sim import SimTrace, read_states


class EmulationError(Exception):
    pass


@dataclass(frozen=True)
class LogicState:
    """One bit per device; None where no value was ever established."""

    bits: tuple

    def as_bits(self, default: int = 0) -> tuple:
        """Physical view: undefined devices sit in HRS (0)."""
        return tuple(default if b is None else b for b in self.bits)


def emulate(plan: ExecutionPlan, pattern: InputPattern, record_log: bool = False):
    """Run the plan at logic level; returns the final LogicState.

    With record_log=True returns (state, log) where log holds the LogicState
    after every sequence entry.
    """
    if len(pattern.bits) != len(plan.inputs):
        raise EmulationError(
            f"pattern has {len(pattern.bits)} bits but the plan has {len(plan.inputs)} inputs"
        )
    values = [0] * plan.row_size
    defined = [False] * plan.row_size
    for sig, bit in zip(plan.inputs, pattern.bits):
        values[sig.device] = bit
        defined[sig.device] = True

    def read(ref, label):
        if not defined[ref.device]:
            raise EmulationError(
                f"cycle {label}: operand {ref.name!r}({ref.device}) read before "
                "any load, Init or gate write"
            )
        return values[ref.device]

    log = []
    for label, op in plan.sequence:
        if isinstance(op, InitOp):
            for t in op.targets:
                values[t.device] = 1
                defined[t.device] = True
        elif isinstance(op, NotOp):
            v = read(op.input, label)
            values[op.output.device] = 1 - v
            defined[op.output.device] = True
        elif isinstance(op, NorOp):
            a = read(op.input_a, label)
            b = read(op.input_b, label)
            values[op.output.device] = 1 - (a | b)
            defined[op.output.device] = True
        if record_log:
            log.append(
                LogicState(bits=tuple(v if d else None for v, d in zip(values, defined)))
            )

    final = LogicState(bits=tuple(v if d else None for v, d in zip(values, defined)))
    if record_log:
        return final, log
    return final


def expected_outputs(plan: ExecutionPlan, pattern: InputPattern) -> tuple:
    """Oracle bits at the plan's output devices, in output order."""
    state = emulate(plan, pattern)
    return tuple(state.bits[s.device] for s in plan.outputs)


@dataclass(frozen=True)
class OutputCheck:
    name: str
    device: int
    expected: int
    simulated: int
    read_back: int

    @property
    def match(self) -> bool:
        return self.expected == self.simulated == self.read_back


@dataclass(frozen=True)
class VerificationReport:
    outputs: tuple
    passed: bool
    cycle_log: tuple = ()

    def failures(self):
        return [c for c in self.outputs if not c.match]

    def summary_lines(self):
        lines = []
        for c in self.outputs:
            status = "ok" if c.match else "MISMATCH"
            lines.append(
                f"{c.name}(dev {c.device}): expected {c.expected}, "
                f"final {c.simulated}, read {c.read_back} [{status}]"
            )
        lines.append("PASS" if self.passed else "FAIL")
        return lines


def verify_run(plan: ExecutionPlan, pattern: InputPattern, trace: SimTrace) -> VerificationReport:
    """Compare oracle outputs against both the final states and the read-back bits."""
    state, log = emulate(plan, pattern, record_log=True)
    sensed = read_states(trace)
    checks = []
    for sig in plan.outputs:
        checks.append(
            OutputCheck(
                name=sig.name,
                device=sig.device,
                expected=state.bits[sig.device],
                simulated=trace.final_states[sig.device],
                read_back=sensed[sig.device],
            )
        )
    return VerificationReport(
        outputs=tuple(checks),
        passed=all(c.match for c in checks),
        cycle_log=tuple(log),
    )


def load_reference_table(path):
    """Reference function from a table file of lines 'inputbits outputbits'."""
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or not all(c in "01" for c in parts[0] + parts[1]):
                raise ValueError(f"{path}:{lineno}: expected 'inputbits outputbits'")
            table[tuple(int(c) for c in parts[0])] = tuple(int(c) for c in parts[1])

    def reference(bits):
        try:
            return table[tuple(bits)]
        except KeyError:
            raise ValueError(f"reference table has no entry for input {bits}") from None

    return reference


@dataclass(frozen=True)
class SweepFailure:
    bits: tuple
    expected: tuple
    oracle: tuple
    simulated: tuple | None


@dataclass(frozen=True)
class SweepReport:
    total: int
    passed: int
    failures: tuple

    @property
    def all_passed(self) -> bool:
        return self.passed == self.total


def truth_table_sweep(
    plan: ExecutionPlan,
    reference,
    max_exhaustive_inputs: int = 16,
    sample_count: int = 256,
    seed: int = 0,
    simulate=None,
) -> SweepReport:
    """Check the plan against a reference function over input patterns.

    Exhaustive over all 2^n patterns while n <= max_exhaustive_inputs, else a
    seeded random sample. `reference` maps an input bit tuple to the expected
    output bit tuple (or is a path accepted by load_reference_table). An
    optional `simulate` callable mapping InputPattern -> output bits is
    checked alongside the oracle.
    """
    if isinstance(reference, (str, bytes)) or hasattr(reference, "__fspath__"):
        reference = load_reference_table(reference)
    n_in = len(plan.inputs)
    if n_in <= max_exhaustive_inputs:
        patterns = [tuple(bits) for bits in itertools.product((0, 1), repeat=n_in)]
    else:
        rng = np.random.default_rng(seed)
        patterns = [tuple(int(b) for b in rng.integers(0, 2, n_in)) for _ in range(sample_count)]

    failures = []
    for bits in patterns:
        pattern = InputPattern(bits=bits, name="".join(map(str, bits)))
        expected = tuple(reference(bits))
        got = expected_outputs(plan, pattern)
        sim_bits = None
        ok = got == expected
        if simulate is not None:
            sim_bits = tuple(simulate(pattern))
            ok = ok and sim_bits == expected
        if not ok:
            failures.append(
                SweepFailure(bits=bits, expected=expected, oracle=got, simulated=sim_bits)
            )
    return SweepReport(
        total=len(patterns), passed=len(patterns) - len(failures), failures=tuple(failures)
    )
