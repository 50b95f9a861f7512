"""Float kernels for the entropic family.

The only hot float loop in the package is a grouped log-sum-exp: for every
parent slot ``a`` and component ``i``

    out[a, i] = (1/lam[i]) * log sum_{k: group[k] == a} exp(logp[k] + lam[i] * vals[k, i])

It runs once per level for the backward composition and once per time for
the direct closed form.  A numba version is used when numba imports and
``RISKSET_DISABLE_NUMBA`` is unset; otherwise the numpy version runs.  Both
use the max-shift so large exponents never overflow.
"""
from __future__ import annotations

import os

import numpy as np


def grouped_lse_numpy(vals, group, logp, lam, n_groups):
    vals = np.asarray(vals, dtype=np.float64)
    z = logp[:, None] + vals * lam[None, :]
    shift = np.full((n_groups, z.shape[1]), -np.inf)
    np.maximum.at(shift, group, z)
    acc = np.zeros((n_groups, z.shape[1]))
    np.add.at(acc, group, np.exp(z - shift[group]))
    return (shift + np.log(acc)) / lam[None, :]


def _grouped_lse_loop(vals, group, logp, lam, n_groups):
    n, d = vals.shape
    shift = np.full((n_groups, d), -np.inf)
    for k in range(n):
        a = group[k]
        for i in range(d):
            z = logp[k] + vals[k, i] * lam[i]
            if z > shift[a, i]:
                shift[a, i] = z
    acc = np.zeros((n_groups, d))
    for k in range(n):
        a = group[k]
        for i in range(d):
            acc[a, i] += np.exp(logp[k] + vals[k, i] * lam[i] - shift[a, i])
    out = np.empty((n_groups, d))
    for a in range(n_groups):
        for i in range(d):
            out[a, i] = (shift[a, i] + np.log(acc[a, i])) / lam[i]
    return out


def _load_numba():
    if os.environ.get("RISKSET_DISABLE_NUMBA", "").strip() not in ("", "0"):
        return None
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        return None
    return njit(cache=False, fastmath=False)(_grouped_lse_loop)


_NUMBA_LSE = _load_numba()
USING_NUMBA = _NUMBA_LSE is not None


def grouped_lse(vals, group, logp, lam, n_groups):
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    group = np.ascontiguousarray(group, dtype=np.int64)
    logp = np.ascontiguousarray(logp, dtype=np.float64)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    if _NUMBA_LSE is not None:
        return _NUMBA_LSE(vals, group, logp, lam, int(n_groups))
    return grouped_lse_numpy(vals, group, logp, lam, int(n_groups))
