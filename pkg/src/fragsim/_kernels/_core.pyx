# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trajectory kernel; draws the same splitmix64 stream as the
pure-Python fallback so both produce identical trajectories per seed."""

import numpy as np
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t


cdef inline uint64_t _mix(uint64_t* state) nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline int _randint(uint64_t* state, uint64_t m) nogil:
    return <int>(((_mix(state) >> 32) * m) >> 32)


def run_local(
    uint8_t[::1] letters0,
    int d,
    int r,
    int32_t[::1] class_of,
    int32_t[::1] class_start,
    int32_t[::1] class_members,
    int32_t[::1] bath_starts,
    int32_t[::1] bath_widths,
    int32_t[::1] bath_nout,
    int32_t[:, ::1] bath_outcomes,
    int k,
    int64_t steps,
    double[:, ::1] weights,
    double[::1] obs_out,
    int64_t[::1] snap_times,
    uint8_t[:, ::1] snapshots,
    uint64_t seed,
    bint bath_enabled=True,
):
    cdef int L = letters0.shape[0]
    cdef uint8_t[::1] letters = np.array(letters0, dtype=np.uint8)
    cdef uint64_t state = seed
    cdef int64_t pow_d[16]
    cdef int j
    pow_d[0] = 1
    for j in range(1, r + 1):
        pow_d[j] = pow_d[j - 1] * d
    cdef int n_actions = bath_starts.shape[0]
    cdef int64_t n_snap = snap_times.shape[0]
    cdef int64_t snap_ptr = 0
    cdef int64_t t
    cdef int a, s, w, off, c, lo, hi, sweep
    cdef int64_t code, pick
    cdef double acc
    cdef int i

    acc = 0.0
    for i in range(L):
        acc += weights[i, letters[i]]
    obs_out[0] = acc
    if n_snap > 0 and snap_times[0] == 0:
        for i in range(L):
            snapshots[0, i] = letters[i]
        snap_ptr = 1

    with nogil:
        for t in range(1, steps + 1):
            if bath_enabled:
                for a in range(n_actions):
                    s = bath_starts[a]
                    w = bath_widths[a]
                    pick = bath_outcomes[a, _randint(&state, bath_nout[a])]
                    for j in range(w):
                        letters[s + j] = <uint8_t>((pick / pow_d[j]) % d)
            for sweep in range(k):
                for off in range(r):
                    s = off
                    while s + r <= L:
                        code = 0
                        for j in range(r - 1, -1, -1):
                            code = code * d + letters[s + j]
                        c = class_of[code]
                        lo = class_start[c]
                        hi = class_start[c + 1]
                        if hi - lo > 1:
                            pick = class_members[lo + _randint(&state, hi - lo)]
                            for j in range(r):
                                letters[s + j] = <uint8_t>((pick / pow_d[j]) % d)
                        s += r
            acc = 0.0
            for i in range(L):
                acc += weights[i, letters[i]]
            obs_out[t] = acc
            if snap_ptr < n_snap and snap_times[snap_ptr] == t:
                for i in range(L):
                    snapshots[snap_ptr, i] = letters[i]
                snap_ptr += 1
    return None
