import numpy as np
import pytest

from magicrow import device, fixtures, oracle, sim
from magicrow.schedule import InputPattern, build_schedule


@pytest.fixture(scope="session")
def params():
    return device.default_params()


@pytest.fixture(scope="session")
def half_adder():
    return fixtures.half_adder_plan()


@pytest.fixture(scope="session")
def c17():
    return fixtures.c17_plan()


@pytest.fixture(scope="session", autouse=True)
def warm_engine(params):
    """Pay the JIT compile once so timed tests measure steady-state runtime."""
    plan = fixtures.chain_plan(2, 2)
    schedule = build_schedule(plan, InputPattern(bits=(1,), name="warm"))
    sim.run_transient(plan, schedule, [params] * plan.row_size)


def run_plan(plan, bits, params, timing=None, volts=None, opts=None, name=None):
    """One-stop transient run used across the suite."""
    pattern = InputPattern(bits=tuple(bits), name=name or "".join(map(str, bits)) or "empty")
    schedule = build_schedule(plan, pattern, timing, volts)
    result = sim.run_transient(plan, schedule, [params] * plan.row_size, opts)
    return pattern, schedule, result


def output_bits(plan, result):
    return tuple(result.trace.final_states[d] for d in plan.output_devices)


def verify(plan, bits, params, **kwargs):
    pattern, schedule, result = run_plan(plan, bits, params, **kwargs)
    return oracle.verify_run(plan, pattern, result.trace)
