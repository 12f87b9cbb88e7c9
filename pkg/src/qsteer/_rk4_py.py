"""Pure-NumPy RK4 kernel; same contract as the compiled ``_rk4`` module."""

import numpy as np


def rk4_modulated(g0, g1, amp, carrier, phase, x0, dt, nsteps, record):
    """Integrate ``x' = (g0 + amp cos(carrier t - phase) g1) x`` from ``t = 0``.

    Returns the states after the step counts listed in ``record`` (sorted,
    0 meaning the initial state) as a ``(len(record), m)`` array.
    """
    g0 = np.ascontiguousarray(g0, dtype=complex)
    g1 = np.ascontiguousarray(g1, dtype=complex)
    record = np.asarray(record, dtype=np.int64)
    x = np.array(x0, dtype=complex)
    out = np.empty((record.size, x.size), dtype=complex)
    driven = amp != 0 and np.any(g1)
    h2, h6 = 0.5 * dt, dt / 6.0
    r = 0
    while r < record.size and record[r] == 0:
        out[r] = x
        r += 1
    for step in range(nsteps):
        if driven:
            t = step * dt
            f0 = amp * np.cos(carrier * t - phase)
            fh = amp * np.cos(carrier * (t + h2) - phase)
            f1 = amp * np.cos(carrier * (t + dt) - phase)
            k1 = g0 @ x + f0 * (g1 @ x)
            y = x + h2 * k1
            k2 = g0 @ y + fh * (g1 @ y)
            y = x + h2 * k2
            k3 = g0 @ y + fh * (g1 @ y)
            y = x + dt * k3
            k4 = g0 @ y + f1 * (g1 @ y)
        else:
            k1 = g0 @ x
            k2 = g0 @ (x + h2 * k1)
            k3 = g0 @ (x + h2 * k2)
            k4 = g0 @ (x + dt * k3)
        x = x + h6 * (k1 + 2 * k2 + 2 * k3 + k4)
        while r < record.size and record[r] == step + 1:
            out[r] = x
            r += 1
    return out
