"""Voltage-threshold (VTEAM-style) memristor model.

State variable w in [w_min, w_max] maps linearly onto resistance, with
w = w_max the low-resistive state (logic 1):

    R(w) = r_on + (r_off - r_on) * (w_max - w) / (w_max - w_min)
    i    = v / R(w)                                  (linear I-V branch)

State motion only happens beyond the thresholds (dead zone in between):

    dw/dt = k_set   * (v / v_set   - 1)^alpha_set     for v >= v_set
    dw/dt = k_reset * (v / v_reset - 1)^alpha_reset   for v <= v_reset
    dw/dt = 0                                         otherwise

k_set > 0 drives w up (SET, toward LRS); k_reset < 0 drives w down (RESET).
Integration is explicit Euler at a fixed step with hard clamping at the
bounds; the right-hand side does not depend on w, so Euler is exact up to
the clamp.

The shipped default parameter set is not taken from any measured device; it
is produced by `calibrate()`, which solves the velocity coefficients so that
a 2.0 V pulse of the nominal width fully SETs a device from HRS and a
-0.5 V pulse fully RESETs it from LRS, with a small completion margin so the
same transitions also finish in-circuit where series switch resistance and
voltage dividers shave the drive slightly. Threshold choices follow the
drive levels: v_set above the 1.0 V operation voltage (input devices must
not SET during gate execution), |v_reset| below the 0.5 V worst-case divider
share (gate outputs must RESET), and both well above the 0.2 V read level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np


class DeviceError(Exception):
    pass


class SamplingError(DeviceError):
    """Process-variation sampling could not satisfy parameter invariants."""


@dataclass(frozen=True)
class VteamParams:
    """Model constants. SI units throughout (V, m/s, m, ohm)."""

    v_set: float
    v_reset: float
    k_set: float
    k_reset: float
    alpha_set: float
    alpha_reset: float
    w_min: float
    w_max: float
    r_on: float
    r_off: float

    def validate(self) -> None:
        if not (0 < self.r_on < self.r_off):
            raise DeviceError(f"need 0 < r_on < r_off, got {self.r_on}, {self.r_off}")
        if not (self.w_min < self.w_max):
            raise DeviceError(f"need w_min < w_max, got {self.w_min}, {self.w_max}")
        if not (self.v_reset < 0 < self.v_set):
            raise DeviceError(f"need v_reset < 0 < v_set, got {self.v_reset}, {self.v_set}")
        if self.k_set <= 0:
            raise DeviceError(f"k_set must be > 0, got {self.k_set}")
        if self.k_reset >= 0:
            raise DeviceError(f"k_reset must be < 0, got {self.k_reset}")
        if self.alpha_set < 1 or self.alpha_reset < 1:
            raise DeviceError("alpha exponents must be >= 1")

    @property
    def r_logic_threshold(self) -> float:
        """Geometric-mean resistance separating logic 1 (below) from 0."""
        return math.sqrt(self.r_on * self.r_off)


@dataclass(frozen=True)
class MemristorState:
    """Internal state variable w (m), clamped to the parameter bounds."""

    w: float


def fresh_state(params: VteamParams) -> MemristorState:
    """Power-up state: HRS (logic 0)."""
    return MemristorState(w=params.w_min)


def resistance(state: MemristorState, params: VteamParams) -> float:
    span = params.w_max - params.w_min
    frac = (params.w_max - state.w) / span
    return params.r_on + (params.r_off - params.r_on) * frac


def current(v: float, state: MemristorState, params: VteamParams) -> float:
    return v / resistance(state, params)


def state_derivative(v: float, state: MemristorState, params: VteamParams) -> float:
    if v >= params.v_set:
        return params.k_set * (v / params.v_set - 1.0) ** params.alpha_set
    if v <= params.v_reset:
        return params.k_reset * (v / params.v_reset - 1.0) ** params.alpha_reset
    return 0.0


def step_state(state: MemristorState, v: float, dt: float, params: VteamParams) -> MemristorState:
    """One explicit-Euler step with hard clamping at the state bounds."""
    if dt <= 0:
        raise DeviceError(f"dt must be > 0, got {dt}")
    w = state.w + state_derivative(v, state, params) * dt
    return MemristorState(w=min(max(w, params.w_min), params.w_max))


def to_logic(state: MemristorState, params: VteamParams) -> int:
    """1 iff resistance is at or below the geometric mean of (r_on, r_off)."""
    return 1 if resistance(state, params) <= params.r_logic_threshold else 0


# --- calibration -----------------------------------------------------------

# Completion margin: transitions are solved to finish in pulse_width/margin.
# 1.6 covers the worst in-circuit drive droop: a full-row bulk
# re-initialization pushes ~0.1 A through the 1-ohm row relay, and the
# resulting ~1.9 V across a still-HRS device slows its SET to ~0.66x the
# nominal rate. Anything above ~1.51 still completes that transition inside
# the pulse.
CALIBRATION_MARGIN = 1.6


def _pulse_travel(k: float, v: float, threshold: float, alpha: float, duration: float,
                  dt: float) -> float:
    """|w| travel of a constant-voltage pulse, integrated on the solver grid."""
    n_steps = int(round(duration / dt))
    rate = abs(k) * abs(v / threshold - 1.0) ** alpha
    travel = 0.0
    for _ in range(n_steps):
        travel += rate * dt
    return travel


def _solve_k(v: float, threshold: float, alpha: float, span: float, duration: float,
             dt: float = 1e-12) -> float:
    """Smallest |k| whose constant-voltage pulse covers `span` within `duration`.

    Bisection against the integrated pulse keeps the solved value tied to the
    solver grid rather than to a closed form.
    """
    lo, hi = 0.0, 1.0
    while _pulse_travel(hi, v, threshold, alpha, duration, dt) < span:
        hi *= 2.0
        if hi > 1e12:
            raise DeviceError("calibration diverged: pulse cannot cover the state span")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _pulse_travel(mid, v, threshold, alpha, duration, dt) >= span:
            hi = mid
        else:
            lo = mid
    return hi


def calibrate(
    v_set: float = 1.2,
    v_reset: float = -0.3,
    alpha_set: float = 3.0,
    alpha_reset: float = 3.0,
    w_min: float = 0.0,
    w_max: float = 3e-9,
    r_on: float = 1e4,
    r_off: float = 1e6,
    set_voltage: float = 2.0,
    reset_voltage: float = -0.5,
    pulse_width: float = 1.3e-9,
    dt: float = 1e-12,
    margin: float = CALIBRATION_MARGIN,
) -> VteamParams:
    """Solve the velocity coefficients for the shipped default parameter set.

    A full SET (w_min -> w_max) at `set_voltage` and a full RESET at
    `reset_voltage` must both complete within pulse_width/margin.
    """
    span = w_max - w_min
    k_set = _solve_k(set_voltage, v_set, alpha_set, span, pulse_width / margin, dt)
    k_reset = -_solve_k(reset_voltage, v_reset, alpha_reset, span, pulse_width / margin, dt)
    params = VteamParams(
        v_set=v_set,
        v_reset=v_reset,
        k_set=k_set,
        k_reset=k_reset,
        alpha_set=alpha_set,
        alpha_reset=alpha_reset,
        w_min=w_min,
        w_max=w_max,
        r_on=r_on,
        r_off=r_off,
    )
    params.validate()
    return params


_DEFAULT_CACHE: dict[str, VteamParams] = {}


def default_params() -> VteamParams:
    """The calibrated default preset (cached; deterministic)."""
    if "default" not in _DEFAULT_CACHE:
        _DEFAULT_CACHE["default"] = calibrate()
    return _DEFAULT_CACHE["default"]


PRESETS = {"default": default_params, "calibrated": default_params}


# --- parameter files -------------------------------------------------------

def save_params(params: VteamParams, path) -> None:
    """Write one `name = value` line per field, SI units."""
    lines = [f"{f.name} = {getattr(params, f.name)!r}" for f in fields(VteamParams)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_params(path) -> VteamParams:
    """Read a flat `name = value` parameter file written by save_params."""
    values = {}
    field_names = {f.name for f in fields(VteamParams)}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DeviceError(f"{path}:{lineno}: expected 'name = value', got {raw!r}")
            name, _, value = line.partition("=")
            name = name.strip()
            if name not in field_names:
                raise DeviceError(f"{path}:{lineno}: unknown parameter {name!r}")
            try:
                values[name] = float(value.strip())
            except ValueError as e:
                raise DeviceError(f"{path}:{lineno}: bad value for {name!r}") from e
    missing = field_names - values.keys()
    if missing:
        raise DeviceError(f"{path}: missing parameters: {sorted(missing)}")
    params = VteamParams(**values)
    params.validate()
    return params


def resolve_params(name_or_path: str) -> VteamParams:
    """Look up a named preset, or load a parameter file."""
    if name_or_path in PRESETS:
        return PRESETS[name_or_path]()
    return load_params(name_or_path)


# --- process variation -----------------------------------------------------

# Field order is part of the sampling contract: draws are consumed in this
# order, so a given (seed, device_index) always yields the same parameters.
_VARIATION_FIELDS = tuple(f.name for f in fields(VteamParams))


@dataclass(frozen=True)
class VariationSpec:
    """Per-field relative standard deviations plus the RNG seed.

    sigma maps field name -> relative sigma (dimensionless, >= 0); absent
    fields do not vary.
    """

    sigma: dict
    seed: int = 0

    def validate(self) -> None:
        for name, s in self.sigma.items():
            if name not in _VARIATION_FIELDS:
                raise DeviceError(f"unknown VteamParams field {name!r} in variation spec")
            if s < 0:
                raise DeviceError(f"sigma for {name!r} must be >= 0, got {s}")

    @property
    def is_active(self) -> bool:
        return any(s > 0 for s in self.sigma.values())


def sample_varied_params(
    nominal: VteamParams,
    spec: VariationSpec,
    device_index: int,
    max_retries: int = 100,
) -> VteamParams:
    """Draw one device's parameters: each varied field ~ Normal(nominal, sigma*|nominal|).

    Deterministic in (spec.seed, device_index). Draws violating the parameter
    invariants are redrawn; a retry budget exhaustion raises SamplingError.
    """
    spec.validate()
    if not spec.is_active:
        return nominal
    rng = np.random.default_rng([spec.seed, device_index])
    for _ in range(max_retries):
        values = {}
        for name in _VARIATION_FIELDS:
            nom = getattr(nominal, name)
            s = spec.sigma.get(name, 0.0)
            values[name] = float(rng.normal(nom, s * abs(nom))) if s > 0 else nom
        candidate = VteamParams(**values)
        try:
            candidate.validate()
        except DeviceError:
            continue
        return candidate
    raise SamplingError(
        f"device {device_index}: no invariant-satisfying draw in {max_retries} tries"
    )


def params_for_row(nominal: VteamParams, spec: VariationSpec | None, n_devices: int
                   ) -> list[VteamParams]:
    """Per-device parameter list, varied when a spec with nonzero sigma is given."""
    if spec is None or not spec.is_active:
        return [nominal] * n_devices
    return [sample_varied_params(nominal, spec, i) for i in range(n_devices)]


def params_arrays(per_device: list[VteamParams]) -> dict[str, np.ndarray]:
    """Column arrays of every parameter field, as the transient engine wants them."""
    return {
        name: np.array([getattr(p, name) for p in per_device], dtype=np.float64)
        for name in _VARIATION_FIELDS
    }
