"""Stochastic trajectories, exact distribution evolution, and observables.

Time unit convention: one step = one bath kick followed by k brickwork
sweeps.  A sweep applies gate layers at window offsets 0..r-1 (two layers
for two-site rules, three for three-site rules); each gate resamples its
window uniformly within the constraint class of the current window content.
The k = infinity limit ("sector-uniform" mode) replaces the sweeps with a
uniform resample inside the current Krylov sector and needs a decomposition.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .krylov import KrylovDecomposition, KrylovGraph
from .models import Configuration, Model, east_regions

MODES = ("local", "sector-uniform", "krylov-walk")


@dataclass
class SimulationConfig:
    model: Model
    mode: str = "local"
    k: int = 1
    steps: int = 1000
    trajectories: int = 100
    seed: int = 0
    observables: tuple[str, ...] = ()
    bath_enabled: bool = True
    init: str | None = None  # configuration string; model default if None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.steps < 1 or self.trajectories < 1:
            raise ValueError("steps and trajectories must be >= 1")


@dataclass
class ObservableSeries:
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    observable: str
    n_traj: int
    model: str
    L: int
    mode: str
    k: int
    seed: int

    def __post_init__(self):
        assert np.all(np.diff(self.t) > 0)
        assert np.all(self.stderr >= 0)


def traj_seed(seed: int, index: int) -> int:
    """Per-trajectory RNG seed derived from (seed, trajectory index)."""
    ss = np.random.SeedSequence([int(seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def default_init(model: Model) -> Configuration:
    """Lowest-filling start: east has one particle at the wall, tjz all spins
    up, dipole models the zero-particle (all minus) state, breakdown all 0."""
    if model.name == "east":
        return Configuration((1,) + (0,) * (model.L - 1), model.d)
    if model.name == "tjz":
        return Configuration((1,) * model.L, model.d)
    if model.name.startswith("dipole"):
        return Configuration((2,) * model.L, model.d)
    return Configuration((0,) * model.L, model.d)


def weight_matrix(model: Model, obs: str) -> np.ndarray:
    """Per-(site, letter) weights for linear observables."""
    L, d = model.L, model.d
    w = np.zeros((L, d))
    if obs == "Q" and model.name == "breakdown":
        for i in range(L):
            for a in range(d):
                w[i, a] = a * 2.0**i
    elif obs == "m" and model.name == "tjz":
        w[:, 1] = 1.0 / L
        w[:, 2] = -1.0 / L
    elif (obs == "N" or obs == "Q") and model.name.startswith("dipole"):
        # particle number n_i = S_i + 1; the bulk gates conserve it, so its
        # growth from the zero-particle state is pure bath injection
        w[:, 0] = 1.0
        w[:, 1] = 2.0
    elif obs == "N":
        w[:, 1:] = 1.0
    elif obs == "qsigned" and model.name.startswith("dipole"):
        w[:, 1] = 1.0
        w[:, 2] = -1.0
    else:
        raise ValueError(f"observable {obs!r} incompatible with model {model.name}")
    return w


# ---------------------------------------------------------------------------
# kernel plumbing


def _gate_tables(model: Model):
    d, r = model.d, model.r
    n = d**r
    class_of = np.empty(n, dtype=np.int32)
    classes = model.window_classes()
    classes = sorted(classes, key=lambda g: g[0])
    members = []
    start = [0]
    for cid, group in enumerate(classes):
        for wcode in group:
            class_of[wcode] = cid
        members.extend(group)
        start.append(len(members))
    return (
        class_of,
        np.array(start, dtype=np.int32),
        np.array(members, dtype=np.int32),
    )


def _bath_tables(model: Model):
    acts = model.bath.actions()
    if not acts:
        z = np.zeros(0, dtype=np.int32)
        return z, z, z, np.zeros((0, 1), dtype=np.int32)
    starts = np.array([a[0] for a in acts], dtype=np.int32)
    widths = np.array([a[1] for a in acts], dtype=np.int32)
    nouts = np.array([len(a[2]) for a in acts], dtype=np.int32)
    mx = int(nouts.max())
    table = np.zeros((len(acts), mx), dtype=np.int32)
    for i, (_, _, outs) in enumerate(acts):
        for j, pick in enumerate(outs):
            table[i, j] = sum(a * model.d**jj for jj, a in enumerate(pick))
    return starts, widths, nouts, table


def run_trajectory(
    model: Model,
    init: Configuration,
    steps: int,
    k: int,
    seed: int,
    obs_weights: np.ndarray | None = None,
    snap_times: np.ndarray | None = None,
    bath_enabled: bool = True,
    kernel=None,
):
    """One local-mode trajectory; returns (observable array, snapshots)."""
    class_of, class_start, class_members = _gate_tables(model)
    starts, widths, nouts, table = _bath_tables(model)
    if obs_weights is None:
        obs_weights = np.zeros((model.L, model.d))
    letters0 = np.array(init.letters, dtype=np.uint8)
    obs_out = np.zeros(steps + 1)
    if snap_times is None:
        snap_times = np.zeros(0, dtype=np.int64)
    snap_times = np.asarray(snap_times, dtype=np.int64)
    snapshots = np.zeros((len(snap_times), model.L), dtype=np.uint8)
    fn = kernel or _kernels.run_local
    fn(
        letters0,
        model.d,
        model.r,
        class_of,
        class_start,
        class_members,
        starts,
        widths,
        nouts,
        table,
        k,
        steps,
        np.ascontiguousarray(obs_weights),
        obs_out,
        snap_times,
        snapshots,
        np.uint64(seed),
        bath_enabled,
    )
    return obs_out, snapshots


def _one_traj_worker(args):
    model, init, steps, k, seed, obs, bath_enabled = args
    w = weight_matrix(model, obs) if obs != "x" else None
    snap = None
    if obs == "x":
        snap = np.arange(steps + 1, dtype=np.int64)
    out, snaps = run_trajectory(
        model, init, steps, k, seed, obs_weights=w, snap_times=snap, bath_enabled=bath_enabled
    )
    if obs == "x":
        out = np.array([_east_x(s) for s in snaps])
    return out


def _east_x(letters) -> float:
    regs = east_regions(tuple(int(a) for a in letters))
    return float(regs[-1][1]) if regs else 0.0


def run_trajectories(config: SimulationConfig, observable: str) -> ObservableSeries:
    """Mean/stderr of one observable across independent local trajectories.

    FRAGSIM_THREADS > 1 fans trajectories out to worker processes.
    """
    model = config.model
    if config.mode != "local":
        raise ValueError("run_trajectories is the local-mode driver")
    init = model.config(config.init) if config.init else default_init(model)
    jobs = [
        (model, init, config.steps, config.k, traj_seed(config.seed, i), observable, config.bath_enabled)
        for i in range(config.trajectories)
    ]
    workers = int(os.environ.get("FRAGSIM_THREADS", "1"))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_one_traj_worker, jobs, chunksize=max(1, len(jobs) // workers)))
    else:
        results = [_one_traj_worker(j) for j in jobs]
    arr = np.stack(results)
    mean = arr.mean(axis=0)
    n = len(jobs)
    stderr = arr.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return ObservableSeries(
        np.arange(config.steps + 1),
        mean,
        stderr,
        observable,
        n,
        model.name,
        model.L,
        "local",
        config.k,
        config.seed,
    )


# ---------------------------------------------------------------------------
# coarse modes


def step(state: Configuration, config: SimulationConfig, rng: np.random.Generator,
         decomp: KrylovDecomposition | None = None) -> Configuration:
    """One time unit on a single state (local or sector-uniform mode)."""
    from .models import apply_bath

    model = config.model
    if config.mode == "krylov-walk":
        raise ValueError("krylov-walk steps operate on sector ids, see krylov_walk_step")
    s = apply_bath(state, model.bath, rng) if config.bath_enabled else state
    if config.mode == "sector-uniform":
        if decomp is None:
            raise ValueError("sector-uniform mode needs a KrylovDecomposition")
        states = decomp.states_of(decomp.sector_of_config(s))
        return Configuration.from_index(int(rng.choice(states)), model.L, model.d)
    # local mode: k sweeps of brickwork gates
    classes = model.window_classes()
    class_by_code = {}
    for group in classes:
        for w in group:
            class_by_code[w] = group
    d, r = model.d, model.r
    letters = list(s.letters)
    for _ in range(config.k):
        for off in range(r):
            for w0 in range(off, model.L - r + 1, r):
                code = 0
                for j in range(r - 1, -1, -1):
                    code = code * d + letters[w0 + j]
                group = class_by_code[code]
                if len(group) > 1:
                    pick = group[rng.integers(len(group))]
                    for j in range(r):
                        letters[w0 + j] = (pick // d**j) % d
    return Configuration(tuple(letters), d)


def run_sector_uniform(config: SimulationConfig, observable: str,
                       decomp: KrylovDecomposition) -> ObservableSeries:
    """Vectorized ensemble of k = infinity trajectories.

    Each step resamples the bath sites and then draws a uniform state from
    the walker's current Krylov sector.
    """
    model = config.model
    d = model.d
    init = model.config(config.init) if config.init else default_init(model)
    n_traj = config.trajectories
    rng = np.random.default_rng(config.seed)
    w = weight_matrix(model, observable)
    wflat = np.zeros(model.n_states)
    from .krylov import _all_letters

    letters = _all_letters(model.n_states, model.L, model.d)
    for i in range(model.L):
        wflat += w[i][letters[:, i]]
    # per-sector state lists for uniform resampling
    order = np.argsort(decomp.sector_of, kind="stable")
    ptr = np.concatenate([[0], np.cumsum(decomp.sizes)])
    states = np.full(n_traj, init.index(), dtype=np.int64)
    acts = model.bath.actions()
    act_tables = []
    for start, width, outs in acts:
        vals = np.array([sum(a * d**j for j, a in enumerate(p)) for p in outs], dtype=np.int64)
        act_tables.append((d**start, d**width, vals))
    mean = np.zeros(config.steps + 1)
    err = np.zeros(config.steps + 1)

    def record(t):
        v = wflat[states]
        mean[t] = v.mean()
        err[t] = v.std(ddof=1) / np.sqrt(n_traj) if n_traj > 1 else 0.0

    record(0)
    for t in range(1, config.steps + 1):
        if config.bath_enabled:
            for plo, pw, vals in act_tables:
                cur = (states // plo) % pw
                pick = vals[rng.integers(len(vals), size=n_traj)]
                states = states + (pick - cur) * plo
        sec = decomp.sector_of[states]
        offs = rng.integers(decomp.sizes[sec])
        states = order[ptr[sec] + offs]
        record(t)
    return ObservableSeries(
        np.arange(config.steps + 1), mean, err, observable, n_traj,
        model.name, model.L, "sector-uniform", 0, config.seed,
    )


def krylov_walk_step(sector_state: int, graph: KrylovGraph, rng: np.random.Generator) -> int:
    """Sample the next sector from the node's outgoing distribution."""
    row = graph.counts.getrow(sector_state)
    tot = int(graph.sizes[sector_state]) * graph.n_out
    if row.sum() != tot:
        raise RuntimeError("node without full outgoing mass")  # impossible by stochasticity
    u = rng.integers(tot)
    acc = 0
    for j, c in zip(row.indices, row.data):
        acc += int(c)
        if u < acc:
            return int(j)
    raise AssertionError("unreachable")


class KrylovWalker:
    """Vectorized ensemble of random walkers on a Krylov graph."""

    def __init__(self, graph: KrylovGraph, n_walkers: int, start: int, seed: int):
        P = graph.prob_matrix().toarray()
        self.n = P.shape[0]
        # per-node cumulative distribution over compact neighbor lists
        deg = (P > 0).sum(axis=1).max()
        self.nbrs = np.zeros((self.n, deg), dtype=np.int64)
        self.cum = np.ones((self.n, deg))
        for v in range(self.n):
            (idx,) = np.nonzero(P[v])
            c = np.cumsum(P[v, idx])
            self.nbrs[v, : len(idx)] = idx
            self.nbrs[v, len(idx):] = idx[-1] if len(idx) else v
            self.cum[v, : len(c)] = c / c[-1]
        self.state = np.full(n_walkers, start, dtype=np.int64)
        self.rng = np.random.default_rng(seed)

    def step(self):
        u = self.rng.random((len(self.state), 1))
        choice = (u < self.cum[self.state]).argmax(axis=1)
        self.state = self.nbrs[self.state, choice]
        return self.state


def run_krylov_walk(
    graph: KrylovGraph,
    start: int,
    steps: int,
    n_walkers: int,
    seed: int,
    node_values: np.ndarray,
    model_name: str = "",
    L: int = 0,
    record_times: np.ndarray | None = None,
) -> ObservableSeries:
    """Ensemble mean/stderr of a per-node observable along the walk."""
    walker = KrylovWalker(graph, n_walkers, start, seed)
    times = np.arange(steps + 1) if record_times is None else np.asarray(record_times)
    means = np.zeros(len(times))
    errs = np.zeros(len(times))
    ptr = 0
    vals = node_values[walker.state]
    if times[0] == 0:
        means[0], errs[0] = vals.mean(), vals.std(ddof=1) / np.sqrt(n_walkers)
        ptr = 1
    for t in range(1, steps + 1):
        walker.step()
        if ptr < len(times) and times[ptr] == t:
            vals = node_values[walker.state]
            means[ptr] = vals.mean()
            errs[ptr] = vals.std(ddof=1) / np.sqrt(n_walkers) if n_walkers > 1 else 0.0
            ptr += 1
    return ObservableSeries(times, means, errs, "node-value", n_walkers, model_name, L, "krylov-walk", 0, seed)


# ---------------------------------------------------------------------------
# exact distribution evolution

EVOLVE_CAP = 5_000_000


class EvolutionOperator:
    """Exact one-step push-forward on the full d^L distribution."""

    def __init__(self, model: Model, mode: str = "local", k: int = 1,
                 decomp: KrylovDecomposition | None = None, bath_enabled: bool = True):
        if model.n_states > EVOLVE_CAP:
            raise ValueError("state space too large for exact evolution")
        if mode == "sector-uniform" and decomp is None:
            raise ValueError("sector-uniform mode needs a KrylovDecomposition")
        self.model, self.mode, self.k = model, mode, k
        self.decomp = decomp
        self.bath_enabled = bath_enabled
        d, r = model.d, model.r
        nw = d**r
        self._W = np.zeros((nw, nw))
        for group in model.window_classes():
            for a in group:
                for b in group:
                    self._W[b, a] = 1.0 / len(group)

    def _apply_window(self, p: np.ndarray, start: int, width: int, W: np.ndarray | None) -> np.ndarray:
        d, L = self.model.d, self.model.L
        lo, mid, hi = d**start, d**width, d ** (L - start - width)
        p3 = p.reshape(hi, mid, lo)
        if W is None:  # uniform resample of the window
            out = np.broadcast_to(p3.mean(axis=1, keepdims=True), p3.shape)
        else:
            out = np.einsum("ab,xbz->xaz", W, p3)
        return np.ascontiguousarray(out).reshape(-1)

    def apply(self, p: np.ndarray) -> np.ndarray:
        model = self.model
        if self.bath_enabled:
            for start, width, outs in model.bath.actions():
                assert len(outs) == model.d ** width  # complete resample
                p = self._apply_window(p, start, width, None)
        if self.mode == "sector-uniform":
            sec = self.decomp.sector_of
            mass = np.bincount(sec, weights=p, minlength=self.decomp.n_sectors)
            p = (mass / self.decomp.sizes)[sec]
        elif self.mode == "local":
            r = model.r
            for _ in range(self.k):
                for off in range(r):
                    for s in range(off, model.L - r + 1, r):
                        p = self._apply_window(p, s, r, self._W)
        else:
            raise ValueError(self.mode)
        return p


def evolve_distribution(p0: np.ndarray, op, t: int, record_times=None):
    """Push p0 forward t steps through an EvolutionOperator or a KrylovGraph.

    Returns p_t, or the list of distributions at record_times if given.
    """
    if isinstance(op, KrylovGraph):
        P = op.prob_matrix()
        apply = lambda p: P.T @ p
    else:
        apply = op.apply
    p = np.asarray(p0, dtype=float)
    out = []
    rec = list(record_times) if record_times is not None else None
    if rec and rec[0] == 0:
        out.append(p.copy())
        rec = rec[1:]
    for step_i in range(1, t + 1):
        p = apply(p)
        if rec and rec[0] == step_i:
            out.append(p.copy())
            rec = rec[1:]
    if record_times is not None:
        return out
    return p


def trace_distance_to_uniform(p: np.ndarray) -> float:
    n = len(p)
    return 0.5 * float(np.abs(p - 1.0 / n).sum())


def distribution_expectation(p: np.ndarray, model: Model, obs: str) -> float:
    from .krylov import _all_letters

    w = weight_matrix(model, obs)
    letters = _all_letters(model.n_states, model.L, model.d)
    vals = np.zeros(len(p))
    for i in range(model.L):
        vals += w[i][letters[:, i]]
    return float(p @ vals)


def measure(series_or_p, model: Model | None = None, obs: str | None = None):
    """Observable extraction: pass-through for series, expectation for distributions."""
    if isinstance(series_or_p, ObservableSeries):
        return series_or_p
    if obs == "trace_dist":
        return trace_distance_to_uniform(series_or_p)
    return distribution_expectation(series_or_p, model, obs)


# ---------------------------------------------------------------------------
# derived quantities


@dataclass
class RelaxationResult:
    time: int | None
    censored: bool
    horizon: int
    threshold: float


def relaxation_time(series: ObservableSeries, gamma: float, equilibrium: float,
                    kind: str = "absolute") -> RelaxationResult:
    """First t with |<obs(t)> - equilibrium| below the threshold.

    kind "absolute": threshold is gamma itself (magnetization convention);
    kind "relative": threshold is gamma * |equilibrium| (charge convention).
    Censored series report the horizon instead of extrapolating.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must be in (0,1)")
    thr = gamma if kind == "absolute" else gamma * abs(equilibrium)
    dev = np.abs(series.mean - equilibrium)
    hit = np.nonzero(dev < thr)[0]
    horizon = int(series.t[-1])
    if len(hit) == 0:
        return RelaxationResult(None, True, horizon, thr)
    return RelaxationResult(int(series.t[hit[0]]), False, horizon, thr)


@dataclass
class ChargeTrackResult:
    qa: np.ndarray  # subsystem charge per step
    violations: list
    cut_transfer: np.ndarray | None = None  # (steps+1, L-1) net signed transfer


def subsystem_charge_track(model: Model, init: Configuration, A: tuple[int, int],
                           steps: int, k: int, seed: int,
                           bath_enabled: bool = False) -> ChargeTrackResult:
    """Track subsystem charge under constraint-preserving dynamics.

    A = (first site, last site), 1-based inclusive.  For breakdown, checks
    Q_A(t) - Q_A(0) in {a + b*2^|A| : a,b in {-1,0,1}}; for the dipole
    models, checks that the net signed charge through every cut stays within
    magnitude 2.
    """
    lo, hi = A[0] - 1, A[1]  # python slice bounds
    snap = np.arange(steps + 1, dtype=np.int64)
    _, snaps = run_trajectory(model, init, steps, k, seed, snap_times=snap, bath_enabled=bath_enabled)
    violations = []
    cut = None
    if model.name == "breakdown":
        # subsystem charge with weights 2^(i - lo), i.e. renormalized to A
        qa = (snaps[:, lo:hi].astype(np.int64) * (1 << np.arange(hi - lo, dtype=np.int64))).sum(axis=1)
        allowed = {a + b * 2 ** (hi - lo) for a in (-1, 0, 1) for b in (-1, 0, 1)}
        for t, dq in enumerate(qa - qa[0]):
            if int(dq) not in allowed:
                violations.append((t, int(dq)))
    elif model.name.startswith("dipole"):
        charge = np.array([0, 1, -1], dtype=np.int64)
        s = charge[snaps.astype(np.int64)]
        suffix = s[:, ::-1].cumsum(axis=1)[:, ::-1]  # charge at sites >= i
        cut = suffix[:, 1:] - suffix[0, 1:]  # transfer across cut left of site i
        qa = s[:, lo:hi].sum(axis=1)
        bad = np.abs(cut) > 2
        for t, c in zip(*np.nonzero(bad)):
            violations.append((int(t), int(c)))
    else:
        w = (1 << np.arange(hi - lo, dtype=np.int64))
        qa = (snaps[:, lo:hi].astype(np.int64) * w).sum(axis=1)
    return ChargeTrackResult(qa, violations, cut)


def de_bruijn_dictionary(n: int) -> tuple[int, ...]:
    """Binary spin string of length 2^n + n - 1 containing every length-n
    pattern as a substring (cyclic de Bruijn sequence plus wrap padding).
    Letters are tjz spins: 1 = up, 2 = down.
    """
    if n < 1:
        raise ValueError("n >= 1")
    # standard Lyndon-word concatenation (FKM algorithm)
    seq = []
    a = [0] * (n + 1)

    def db(t, p):
        if t > n:
            if n % p == 0:
                seq.extend(a[1 : p + 1])
        else:
            a[t] = a[t - p]
            db(t + 1, p)
            for j in range(a[t - p] + 1, 2):
                a[t] = j
                db(t + 1, t)

    db(1, 1)
    full = seq + seq[: n - 1]
    return tuple(1 + b for b in full)
