"""Euler-Maruyama inner loops.

Both engines advance a batch of paths through a block of pre-drawn
standard normals.  The numba versions loop path by path; the numpy
fallback loops over time and vectorizes across paths.  The arithmetic is
written in the same order in both so the 1D kernels agree bit for bit.

Set ``SRAMFLIP_BACKEND=numpy`` to disable numba.
"""

from __future__ import annotations

import math
import os

import numpy as np

HIT_NONE = -1
HIT_DOMAIN = -2

_requested = os.environ.get("SRAMFLIP_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"SRAMFLIP_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    if _requested == "numpy":
        raise ImportError
    import numba
except ImportError:
    numba = None

BACKEND = "numba" if numba is not None else "numpy"


def advance_1d_numpy(v, z, h, lo, inv_dx, dt, amp, thr):
    """Advance every row of ``v`` through the columns of ``z`` in place.

    Returns ``hit`` (column index of the first step with v >= thr,
    ``HIT_NONE`` if none, ``HIT_DOMAIN`` if the path fell below ``lo``).
    Rows stop updating once they hit.
    """
    m, k_max = z.shape
    hit = np.full(m, HIT_NONE, dtype=np.int64)
    active = np.arange(m)
    top = h.shape[0] - 2
    for k in range(k_max):
        if active.size == 0:
            break
        va = v[active]
        x = (va - lo) * inv_dx
        i = x.astype(np.int64)
        np.minimum(i, top, out=i)
        f = x - i
        hv = h[i] + f * (h[i + 1] - h[i])
        va = va + hv * dt + amp * z[active, k]
        v[active] = va
        up = va >= thr
        down = va < lo
        done = up | down
        if done.any():
            hit[active[up]] = k
            hit[active[down & ~up]] = HIT_DOMAIN
            active = active[~done]
    return hit


def advance_2d_numpy(lo_node, hi_node, z, half_vdd, vm, vs, d_lo, d_hi, inv_rc, dt, amp):
    """2D cell in the threatened frame: the flip is ``hi_node <= lo_node``.

    ``z[:, k, 0]`` drives the low node and ``z[:, k, 1]`` the high node.
    """
    m, k_max = z.shape[0], z.shape[1]
    hit = np.full(m, HIT_NONE, dtype=np.int64)
    active = np.arange(m)
    for k in range(k_max):
        if active.size == 0:
            break
        a = lo_node[active]
        b = hi_node[active]
        fa = (half_vdd * (1.0 - np.tanh((b + d_lo - vm) / vs)) - a) * inv_rc
        fb = (half_vdd * (1.0 - np.tanh((a + d_hi - vm) / vs)) - b) * inv_rc
        a = a + fa * dt + amp * z[active, k, 0]
        b = b + fb * dt + amp * z[active, k, 1]
        lo_node[active] = a
        hi_node[active] = b
        done = b <= a
        if done.any():
            hit[active[done]] = k
            active = active[~done]
    return hit


if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def advance_1d_numba(v, z, h, lo, inv_dx, dt, amp, thr):
        m, k_max = z.shape
        hit = np.full(m, HIT_NONE, dtype=np.int64)
        top = h.shape[0] - 2
        for r in range(m):
            x_v = v[r]
            for k in range(k_max):
                x = (x_v - lo) * inv_dx
                i = int(x)
                if i > top:
                    i = top
                f = x - i
                hv = h[i] + f * (h[i + 1] - h[i])
                x_v = x_v + hv * dt + amp * z[r, k]
                if x_v >= thr:
                    hit[r] = k
                    break
                if x_v < lo:
                    hit[r] = HIT_DOMAIN
                    break
            v[r] = x_v
        return hit

    @numba.njit(cache=True, nogil=True)
    def advance_2d_numba(lo_node, hi_node, z, half_vdd, vm, vs, d_lo, d_hi, inv_rc, dt, amp):
        m, k_max = z.shape[0], z.shape[1]
        hit = np.full(m, HIT_NONE, dtype=np.int64)
        for r in range(m):
            a = lo_node[r]
            b = hi_node[r]
            for k in range(k_max):
                fa = (half_vdd * (1.0 - math.tanh((b + d_lo - vm) / vs)) - a) * inv_rc
                fb = (half_vdd * (1.0 - math.tanh((a + d_hi - vm) / vs)) - b) * inv_rc
                a = a + fa * dt + amp * z[r, k, 0]
                b = b + fb * dt + amp * z[r, k, 1]
                if b <= a:
                    hit[r] = k
                    break
            lo_node[r] = a
            hi_node[r] = b
        return hit

    advance_1d = advance_1d_numba
    advance_2d = advance_2d_numba
else:
    advance_1d_numba = advance_2d_numba = None
    advance_1d = advance_1d_numpy
    advance_2d = advance_2d_numpy
