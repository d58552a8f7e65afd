"""Inner loop of the transient engine.

`transient_loop` advances the whole row one fixed step at a time: evaluate
the piecewise-linear drives, solve the resistive network in closed form,
integrate every device's state, and accumulate energy online. It is written
against the numpy subset that numba's nopython mode compiles, so the exact
same source serves as the plain-Python fallback and, wrapped in ``njit``,
as the fast path. ``fastmath`` stays off: runs must be bit-reproducible.

The timeline arrives pre-cut into segments on which every waveform is
linear (slopes ``*_b`` all zero on flat tops and gaps). Inside a flat
segment, once no device state moved during a step, nothing can move for
the rest of the segment, so the loop adds the remaining steps' energy in
one multiply and jumps ahead; decimated trace samples and pending read
measurements inside the skipped window are synthesized from the constant
operating point. This is exact, not an approximation, because voltages,
currents and states are all provably constant there.

Network solve per step (all per-column quantities are vectors):

    series_i = R_switch_i + R_device_i
    V(row)   = sum(D_i / series_i) / (1/R_rowswitch + sum(1 / series_i))
    i_i      = (D_i - V(row)) / series_i        (positive column -> row)

which is the exact elimination of the column nodes onto the single row
node; the KCL residual at the row node is tracked and returned.
"""

from __future__ import annotations

import numpy as np


def transient_loop(
    dt,
    n_steps,
    seg_k_start,
    seg_k_end,
    seg_t0,
    seg_flat,
    seg_kind,
    seg_window,
    col_a,
    col_b,
    sw_a,
    sw_b,
    row_a,
    row_b,
    v_set,
    v_reset,
    k_set,
    k_reset,
    alpha_set,
    alpha_reset,
    w_min,
    w_max,
    r_on,
    r_off,
    r_open,
    r_closed,
    ctrl_thresh,
    w,
    decimation,
    meas_k,
    meas_dev,
    trace_times,
    trace_w,
    trace_v,
    trace_i,
    cum_energy,
    energy_dev_kind,
    energy_switch_kind,
    energy_source_kind,
    window_energy,
    read_currents,
):
    n_seg = seg_k_start.shape[0]
    n_meas = meas_k.shape[0]
    w_span = w_max - w_min
    r_span = r_off - r_on
    cum = 0.0
    max_resid = 0.0
    mi = 0

    for s in range(n_seg):
        k = seg_k_start[s]
        k_end = seg_k_end[s]
        t0 = seg_t0[s]
        flat = seg_flat[s] != 0
        kind = seg_kind[s]
        win = seg_window[s]

        while k < k_end:
            tau = k * dt - t0
            drive = col_a[s] + col_b[s] * tau
            ctrl = sw_a[s] + sw_b[s] * tau
            sw_res = np.where(ctrl >= ctrl_thresh, r_closed, r_open)
            row_ctrl = row_a[s] + row_b[s] * tau
            row_res = r_closed if row_ctrl >= ctrl_thresh else r_open

            res = r_on + r_span * (w_max - w) / w_span
            series = sw_res + res
            inv_series = 1.0 / series
            v_row = np.sum(drive * inv_series) / (1.0 / row_res + np.sum(inv_series))
            i_dev = (drive - v_row) * inv_series
            v_dev = i_dev * res

            resid = abs(np.sum(i_dev) - v_row / row_res)
            if resid > max_resid:
                max_resid = resid

            base_set = np.maximum(v_dev / v_set - 1.0, 0.0)
            base_reset = np.maximum(v_dev / v_reset - 1.0, 0.0)
            dw = k_set * base_set**alpha_set + k_reset * base_reset**alpha_reset
            w_new = np.minimum(np.maximum(w + dw * dt, w_min), w_max)

            p_dev = v_dev * i_dev
            p_dev_total = np.sum(p_dev)
            p_switch = np.sum(i_dev * i_dev * sw_res) + v_row * v_row / row_res
            p_source = np.sum(drive * i_dev)
            energy_dev_kind[:, kind] += p_dev * dt
            energy_switch_kind[kind] += p_switch * dt
            energy_source_kind[kind] += p_source * dt
            window_energy[win] += p_dev_total * dt
            cum += p_dev_total * dt

            if k % decimation == 0:
                si = k // decimation
                trace_times[si] = k * dt
                trace_w[si, :] = w
                trace_v[si, :] = v_dev
                trace_i[si, :] = i_dev
                cum_energy[si] = cum

            while mi < n_meas and meas_k[mi] == k:
                read_currents[meas_dev[mi]] = i_dev[meas_dev[mi]]
                mi += 1

            if flat and k + 1 < k_end and np.all(w_new == w):
                n_skip = k_end - (k + 1)
                while mi < n_meas and meas_k[mi] < k_end:
                    read_currents[meas_dev[mi]] = i_dev[meas_dev[mi]]
                    mi += 1
                ks = (k // decimation + 1) * decimation
                while ks < k_end:
                    si = ks // decimation
                    trace_times[si] = ks * dt
                    trace_w[si, :] = w
                    trace_v[si, :] = v_dev
                    trace_i[si, :] = i_dev
                    cum_energy[si] = cum + p_dev_total * dt * (ks - k)
                    ks += decimation
                energy_dev_kind[:, kind] += p_dev * (dt * n_skip)
                energy_switch_kind[kind] += p_switch * dt * n_skip
                energy_source_kind[kind] += p_source * dt * n_skip
                window_energy[win] += p_dev_total * dt * n_skip
                cum += p_dev_total * dt * n_skip
                k = k_end
            else:
                w[:] = w_new
                k += 1

    return max_resid


_JIT_KERNEL = None


def _compiled_kernel():
    global _JIT_KERNEL
    if _JIT_KERNEL is None:
        from numba import njit

        _JIT_KERNEL = njit(cache=True, fastmath=False)(transient_loop)
    return _JIT_KERNEL


def jit_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def get_kernel(engine: str = "auto"):
    """Pick the loop implementation: 'jit', 'python', or 'auto' (jit if possible)."""
    if engine == "python":
        return transient_loop
    if engine == "jit":
        return _compiled_kernel()
    if engine == "auto":
        if jit_available():
            return _compiled_kernel()
        return transient_loop
    raise ValueError(f"unknown engine {engine!r}: expected auto, jit or python")
