"""Committed example mappings and plan builders for tests and demos.

The c17 mapping was hand-derived from the ISCAS'85 c17 NAND network
(inputs 1,2,3,6,7; outputs 22,23). Each NAND feeds only other NANDs, so
every AND-of-inputs term lands on one NOR over the complemented operands:

    a10 = in1*in3            = nor(~in1, ~in3)
    a11 = in3*in6            = nor(~in3, ~in6)
    a16 = in2*g11            = nor(~in2, a11)      (aXX = ~gXX throughout)
    a19 = g11*in7            = nor(a11, ~in7)
    t22 = g10*g16            = nor(a10, a16),  out22 = ~t22
    t23 = g16*g19            = nor(a16, a19),  out23 = ~t23

Five input inverters + two output inverters give 7 NOT, the six product
terms give 6 NOR, one Init cycle up front, no cell reuse: 14 cycles on an
18-device row.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .mapping import (
    ExecutionPlan,
    InitOp,
    NorOp,
    NotOp,
    SignalRef,
    make_plan,
    parse_plan,
)
from .schedule import InputPattern


def _data_text(name: str) -> str:
    return (resources.files("magicrow") / "data" / name).read_text(encoding="utf-8")


def half_adder_text() -> str:
    return _data_text("half_adder.json")


def c17_text() -> str:
    return _data_text("c17.json")


def c17_truth_table_text() -> str:
    return _data_text("c17_truth.txt")


def half_adder_plan() -> ExecutionPlan:
    return parse_plan(half_adder_text())


def c17_plan() -> ExecutionPlan:
    return parse_plan(c17_text())


def half_adder_reference(bits) -> tuple:
    """(S, Cy) = (a xor b, a and b), matching the plan's output order."""
    a, b = bits
    return (a ^ b, a & b)


def c17_reference(bits) -> tuple:
    """(out22, out23) of the c17 NAND network for inputs (1, 2, 3, 6, 7)."""
    i1, i2, i3, i6, i7 = bits

    def nand(a, b):
        return 1 - (a & b)

    g10 = nand(i1, i3)
    g11 = nand(i3, i6)
    g16 = nand(i2, g11)
    g19 = nand(g11, i7)
    return (nand(g10, g16), nand(g16, g19))


FIXTURE_FILES = {
    "half_adder.json": half_adder_text,
    "c17.json": c17_text,
    "c17_truth.txt": c17_truth_table_text,
}


def pad_plan(plan: ExecutionPlan, row_size: int) -> ExecutionPlan:
    """Stretch a plan onto a wider row.

    The leading Init cycle grows to cover every non-input device on the new
    row (the whole row is prepared up front, inputs excepted); the rest of
    the sequence is untouched.
    """
    if row_size < plan.row_size:
        raise ValueError(f"cannot shrink row from {plan.row_size} to {row_size}")
    if row_size == plan.row_size:
        return plan
    sequence = list(plan.sequence)
    if sequence and isinstance(sequence[0][1], InitOp):
        label, first = sequence[0]
        by_device = {t.device: t for t in first.targets}
        inputs = set(plan.input_devices)
        targets = tuple(
            by_device.get(d, SignalRef("D", d)) for d in range(row_size) if d not in inputs
        )
        sequence[0] = (label, InitOp(targets=targets))
    return make_plan(
        row_size=row_size,
        inputs=plan.inputs,
        outputs=plan.outputs,
        sequence=sequence,
        num_gates=plan.num_gates,
    )


def chain_plan(row_size: int, n_cycles: int) -> ExecutionPlan:
    """Synthetic scale fixture: a NOT chain that walks the row.

    One input device feeds a chain of inverters across the initialized
    columns; when the row is exhausted, consumed cells are re-initialized in
    one bulk cycle and the chain keeps going. Produces exactly `n_cycles`
    sequence entries.
    """
    if row_size < 2 or n_cycles < 2:
        raise ValueError("need at least 2 devices and 2 cycles")
    inputs = (SignalRef("A", 0),)
    ref = lambda d: SignalRef(f"n{d}_", d)
    sequence = [("T0", InitOp(targets=tuple(ref(d) for d in range(1, row_size))))]
    available = list(range(1, row_size))
    consumed: list[int] = []
    prev = 0
    for k in range(1, n_cycles):
        if available:
            out = available.pop(0)
            sequence.append((f"T{k}", NotOp(input=ref(prev) if prev else inputs[0], output=ref(out))))
            consumed.append(out)
            prev = out
        else:
            recycle = [d for d in consumed if d != prev]
            sequence.append((f"T{k}", InitOp(targets=tuple(ref(d) for d in recycle))))
            available = recycle
            consumed = [prev]
    outputs = (SignalRef("out", prev),)
    return make_plan(row_size=row_size, inputs=inputs, outputs=outputs, sequence=sequence)


def random_valid_plan(
    rng: np.random.Generator,
    max_devices: int = 64,
    max_cycles: int = 100,
) -> ExecutionPlan:
    """Draw a plan that respects the MAGIC write discipline by construction."""
    n = int(rng.integers(2, max_devices + 1))
    read_only = rng.random() < 0.03
    n_inputs = 0 if read_only else int(rng.integers(1, min(6, n - 1) + 1))
    shuffled = rng.permutation(n)
    input_devs = sorted(int(d) for d in shuffled[:n_inputs])
    non_inputs = sorted(int(d) for d in shuffled[n_inputs:])

    def ref(d):
        return SignalRef(f"s{d}_", d)

    sequence = [("T0", InitOp(targets=tuple(ref(d) for d in non_inputs)))]
    readable = set(input_devs)
    init_ready = set(non_inputs)
    written: set[int] = set()
    budget = int(rng.integers(2, max_cycles + 1))

    k = 1
    while k < budget:
        operand_pool = sorted(readable)
        can_gate = bool(init_ready) and bool(operand_pool)
        if can_gate and (not written or rng.random() > 0.10):
            out = int(rng.choice(sorted(init_ready)))
            candidates = [d for d in operand_pool if d != out]
            if not candidates:
                break
            if rng.random() < 0.5:
                a = int(rng.choice(candidates))
                op = NotOp(input=ref(a), output=ref(out))
            else:
                a = int(rng.choice(candidates))
                b = int(rng.choice(candidates))
                op = NorOp(input_a=ref(a), input_b=ref(b), output=ref(out))
            init_ready.discard(out)
            readable.add(out)
            written.add(out)
        elif written:
            recyclable = sorted(written - init_ready)
            if not recyclable:
                break
            size = int(rng.integers(1, min(len(recyclable), 6) + 1))
            targets = sorted(int(d) for d in rng.choice(recyclable, size=size, replace=False))
            op = InitOp(targets=tuple(ref(d) for d in targets))
            init_ready |= set(targets)
        else:
            break
        sequence.append((f"T{k}", op))
        k += 1

    if written:
        n_out = int(rng.integers(1, min(4, len(written)) + 1))
        out_devs = sorted(int(d) for d in rng.choice(sorted(written), size=n_out, replace=False))
    else:
        out_devs = []
    return make_plan(
        row_size=n,
        inputs=tuple(SignalRef(f"in{d}", d) for d in input_devs),
        outputs=tuple(SignalRef(f"o{d}", d) for d in out_devs),
        sequence=sequence,
    )


def random_pattern(rng: np.random.Generator, plan: ExecutionPlan) -> InputPattern:
    bits = tuple(int(b) for b in rng.integers(0, 2, len(plan.inputs)))
    return InputPattern(bits=bits, name="".join(map(str, bits)) or "empty")
