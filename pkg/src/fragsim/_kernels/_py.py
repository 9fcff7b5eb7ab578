"""Pure-Python trajectory kernel, bit-compatible with the compiled one.

Both kernels draw from the same splitmix64 stream in the same order, so a
trajectory is reproducible from its seed regardless of which kernel ran it.
This one is the fallback (and the reference in tests); the compiled kernel
is selected automatically when its extension imported cleanly.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


class SplitMix64:
    """splitmix64; uniform ints via the 32-bit multiply-shift trick."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randint(self, m: int) -> int:
        return ((self.next_u64() >> 32) * int(m)) >> 32


def run_local(
    letters0,
    d,
    r,
    class_of,
    class_start,
    class_members,
    bath_starts,
    bath_widths,
    bath_nout,
    bath_outcomes,
    k,
    steps,
    weights,
    obs_out,
    snap_times,
    snapshots,
    seed,
    bath_enabled=True,
):
    """One trajectory of the local brickwork dynamics.

    One step = bath kick + k sweeps; a sweep applies the gate layers at
    window offsets 0..r-1 in order; each gate uniformly resamples its window
    within the constraint class of the current window configuration.

    obs_out[t] receives sum_i weights[i, letters[i]] after t steps (t=0 is
    the initial state); snapshots[j] receives the state at step snap_times[j].
    """
    L = len(letters0)
    letters = [int(a) for a in letters0]
    rng = SplitMix64(int(seed))
    pow_d = [d**j for j in range(r + 1)]
    n_actions = len(bath_starts)

    def observe(t):
        obs_out[t] = sum(weights[i][letters[i]] for i in range(L))

    obs_out_l = obs_out
    weights = [list(row) for row in np.asarray(weights)]
    snap_ptr = 0
    n_snap = len(snap_times)
    observe(0)
    if n_snap and snap_times[0] == 0:
        snapshots[0] = letters
        snap_ptr = 1
    for t in range(1, steps + 1):
        if bath_enabled:
            for a in range(n_actions):
                s, w = bath_starts[a], bath_widths[a]
                pick = bath_outcomes[a][rng.randint(bath_nout[a])]
                for j in range(w):
                    letters[s + j] = (pick // pow_d[j]) % d
        for _ in range(k):
            for off in range(r):
                for s in range(off, L - r + 1, r):
                    code = 0
                    for j in range(r - 1, -1, -1):
                        code = code * d + letters[s + j]
                    c = class_of[code]
                    lo, hi = class_start[c], class_start[c + 1]
                    if hi - lo > 1:
                        pick = class_members[lo + rng.randint(hi - lo)]
                        for j in range(r):
                            letters[s + j] = (pick // pow_d[j]) % d
        obs_out_l[t] = sum(weights[i][letters[i]] for i in range(L))
        if snap_ptr < n_snap and snap_times[snap_ptr] == t:
            snapshots[snap_ptr] = letters
            snap_ptr += 1
    return None
