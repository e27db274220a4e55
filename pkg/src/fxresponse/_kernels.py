"""Compiled inner loops for the response estimators."""

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _neumaier_add(sums, comps, k, x):
    s = sums[k]
    t = s + x
    if abs(s) >= abs(x):
        comps[k] += (s - t) + x
    else:
        comps[k] += (x - t) + s
    sums[k] = t


@numba.njit(cache=True, nogil=True)
def accumulate_relative(mid, signs, sums, comps):
    """Add ``sign[t] * (m[t-1+tau] - m[t-1]) / m[t-1]`` into ``sums[tau-1]``.

    Anchors with sign 0 are skipped; lags running past the series end are
    not formed. ``sums``/``comps`` hold a compensated running total per lag.
    """
    n = mid.shape[0]
    tau_max = sums.shape[0]
    for t in range(1, n):
        e = signs[t]
        if e == 0:
            continue
        base = mid[t - 1]
        kmax = min(tau_max, n - t)
        for k in range(kmax):
            _neumaier_add(sums, comps, k, e * ((mid[t + k] - base) / base))


@numba.njit(cache=True, nogil=True)
def accumulate_log(logmid, signs, sums, comps):
    """As :func:`accumulate_relative` with log returns of a log-price array."""
    n = logmid.shape[0]
    tau_max = sums.shape[0]
    for t in range(1, n):
        e = signs[t]
        if e == 0:
            continue
        base = logmid[t - 1]
        kmax = min(tau_max, n - t)
        for k in range(kmax):
            _neumaier_add(sums, comps, k, e * (logmid[t + k] - base))


def anchor_counts(signs: np.ndarray, tau_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Admissible anchors per lag, split into nonzero-sign and zero-sign.

    Anchor ``t`` (1 <= t) is admissible at lag ``tau`` when ``t - 1 + tau``
    is still inside the series, i.e. ``t <= n - tau``.
    """
    n = len(signs)
    nonzero = np.zeros(tau_max, dtype=np.int64)
    zero = np.zeros(tau_max, dtype=np.int64)
    if n < 2:
        return nonzero, zero
    nz = np.concatenate(([0], np.cumsum(np.asarray(signs[1:]) != 0)))
    taus = np.arange(1, tau_max + 1)
    last = n - taus  # largest admissible anchor per lag
    ok = last >= 1
    nonzero[ok] = nz[last[ok]]
    zero[ok] = last[ok] - nz[last[ok]]
    return nonzero, zero
