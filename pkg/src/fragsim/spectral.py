"""Conductance of cuts, min-conductance search, Cheeger bounds, spectral gaps,
and the local-vs-depolarizing conductance equality check.

Conventions (both explicit, every emitted number is tagged):
  - "probabilistic": Phi(R) = sum_{a in R, b not in R} mu(a) p(a->b) / mu(R),
    exact rationals from the graph's integer counts;
  - "combinatorial": boundary (state, state') adjacency pairs / |R|,
    the raw-count convention of the lattice-path analysis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .krylov import KrylovDecomposition, KrylovGraph
from .models import Model


@dataclass
class Cut:
    """A node subset R with mu(R) <= 1/2 (complement taken otherwise)."""

    nodes: frozenset
    mu_mass: Fraction
    flux: Fraction

    @property
    def conductance(self) -> Fraction:
        return self.flux / self.mu_mass


def _normalize_R(graph: KrylovGraph, R) -> frozenset:
    R = frozenset(int(x) for x in R)
    if not R:
        raise ValueError("empty cut")
    total = int(graph.sizes.sum())
    mass = sum(int(graph.sizes[a]) for a in R)
    if 2 * mass > total:
        R = frozenset(range(graph.n_nodes)) - R
        if not R:
            raise ValueError("cut covers the whole graph")
    return R


def cut_conductance(graph: KrylovGraph, R, convention: str = "probabilistic") -> Fraction:
    """Exact conductance of node subset R (complemented if mu(R) > 1/2)."""
    R = _normalize_R(graph, R)
    Rarr = np.zeros(graph.n_nodes, dtype=bool)
    Rarr[list(R)] = True
    coo = graph.counts.tocoo()
    cross = (Rarr[coo.row]) & (~Rarr[coo.col])
    boundary = int(coo.data[cross].sum())
    if convention == "probabilistic":
        # flux = sum mu(a) p(a->b) = counts / (n_states * n_out); mu(R) = |R|/n_states
        size_R = sum(int(graph.sizes[a]) for a in R)
        return Fraction(boundary, graph.n_out * size_R)
    if convention == "combinatorial":
        # boundary adjacency pairs per state in R; counts are already
        # (state, outcome) pairs and distinct outcomes are distinct states
        size_R = sum(int(graph.sizes[a]) for a in R)
        return Fraction(boundary, size_R)
    raise ValueError(f"unknown convention {convention!r}")


def make_cut(graph: KrylovGraph, R, convention: str = "probabilistic") -> Cut:
    R = _normalize_R(graph, R)
    size_R = sum(int(graph.sizes[a]) for a in R)
    phi = cut_conductance(graph, R, convention)
    mass = Fraction(size_R, graph.n_states)
    return Cut(R, mass, phi * mass)


# --- structured cut families ------------------------------------------------


def tree_branch_cuts(graph: KrylovGraph) -> list[tuple[str, frozenset]]:
    """Cone cuts for pattern-labeled graphs (tjz): all sectors whose pattern
    starts with a given prefix, for every occurring nonempty prefix."""
    if graph.labels is None:
        raise ValueError("graph lacks labels")
    cuts = {}
    for i, lab in enumerate(graph.labels):
        for p in range(1, len(lab) + 1):
            cuts.setdefault(tuple(lab[:p]), set()).add(i)
    return [(f"cone{list(k)}", frozenset(v)) for k, v in sorted(cuts.items())]


def line_prefix_cuts(graph: KrylovGraph) -> list[tuple[str, frozenset]]:
    """Prefix cuts {Q <= q} for integer-labeled line graphs (breakdown)."""
    order = np.argsort(np.array(graph.labels, dtype=np.int64))
    out = []
    acc = set()
    for i in order[:-1]:
        acc.add(int(i))
        out.append((f"Q<={graph.labels[int(i)]}", frozenset(acc)))
    return out


def east_halfplane_cuts(graph: KrylovGraph) -> list[tuple[str, frozenset]]:
    """(N, x) half-plane cuts {N' <= N and x' <= x} on a packed east graph."""
    keys = graph.labels
    out = []
    for N, x in sorted(set(keys)):
        R = frozenset(i for i, (n2, x2) in enumerate(keys) if n2 <= N and x2 <= x)
        if 0 < len(R) < graph.n_nodes:
            out.append((f"N<={N},x<={x}", R))
    return out


CUT_FAMILIES = {
    "tree-branch": tree_branch_cuts,
    "line-prefix": line_prefix_cuts,
    "east-halfplane": east_halfplane_cuts,
}


def min_conductance(graph: KrylovGraph, strategy: str = "exhaustive",
                    convention: str = "probabilistic"):
    """(Phi*, R*): exhaustive over all subsets with mu <= 1/2 (<= 22 nodes),
    or the minimizer within a structured cut family (an upper bound)."""
    best = None
    if strategy == "exhaustive":
        n = graph.n_nodes
        if n > 22:
            raise ValueError("exhaustive search capped at 22 nodes")
        nodes = list(range(n))
        for k in range(1, n):
            for R in itertools.combinations(nodes, k):
                try:
                    phi = cut_conductance(graph, R, convention)
                except ValueError:
                    continue
                if best is None or phi < best[0]:
                    best = (phi, frozenset(_normalize_R(graph, R)))
    elif strategy in CUT_FAMILIES:
        for name, R in CUT_FAMILIES[strategy](graph):
            phi = cut_conductance(graph, R, convention)
            if best is None or phi < best[0]:
                best = (phi, R)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if best is None:
        raise ValueError("no admissible cut")
    return best


def cheeger_bound(phi) -> float:
    """Mixing-time lower bound ln(2)/(2 Phi) - 1; infinite for Phi = 0."""
    if phi < 0:
        raise ValueError("negative conductance")
    if phi == 0:
        return float("inf")
    return float(np.log(2) / (2 * phi) - 1)


# --- spectra ----------------------------------------------------------------


def spectral_gap(P, mu=None, tol: float = 1e-10, maxiter: int = 100_000):
    """Second-largest eigenvalue of a mu-reversible stochastic matrix.

    Dense solve below 2000 states, deflated power iteration above (with a
    deterministic start vector).  Returns (lambda2, mixing_estimate) where
    mixing_estimate = 1/(1 - lambda2).
    """
    import scipy.sparse as sp

    n = P.shape[0]
    dense = not sp.issparse(P) or n < 2000
    if mu is None:
        mu = np.full(n, 1.0 / n)
    mu = np.asarray(mu, dtype=float)
    # symmetrize: S = D^(1/2) P D^(-1/2) shares the spectrum of P
    d = np.sqrt(mu)
    if dense:
        Pd = P.toarray() if sp.issparse(P) else np.asarray(P)
        S = (d[:, None] * Pd) / d[None, :]
        S = 0.5 * (S + S.T)  # kill rounding asymmetry
        w = np.linalg.eigvalsh(S)
        lam2 = float(w[-2])
    else:
        top = d / np.linalg.norm(d)  # exact top eigenvector of S
        Pc = P.tocsr()

        def apply_S(v):
            return d * (Pc.T @ (v / d))

        rng_free = np.sin(np.arange(n) + 1.0)  # deterministic start
        v = rng_free - (top @ rng_free) * top
        v /= np.linalg.norm(v)
        lam2 = 0.0
        for it in range(maxiter):
            w_ = apply_S(v)
            w_ -= (top @ w_) * top
            nrm = np.linalg.norm(w_)
            if nrm == 0:
                lam2 = 0.0
                break
            w_ /= nrm
            new = float(w_ @ apply_S(w_))
            if abs(new - lam2) <= tol * max(1.0, abs(new)):
                lam2 = new
                break
            lam2, v = new, w_
        else:
            raise RuntimeError("power iteration did not converge")
    mix = float("inf") if lam2 >= 1 else 1.0 / (1.0 - lam2)
    return lam2, mix


# --- exact small-L chains and the equality check ----------------------------


def _apply_gate_exact(p: dict, model: Model, start: int, class_by_code, pow_d):
    d, r = model.d, model.r
    out: dict[int, Fraction] = {}
    for code, w in p.items():
        wcode = (code // d**start) % d**r
        group = class_by_code[wcode]
        share = w / len(group)
        base = code - wcode * d**start
        for g in group:
            nc = base + g * d**start
            out[nc] = out.get(nc, Fraction(0)) + share
    return out


def _apply_bath_exact(p: dict, model: Model):
    d = model.d
    for start, width, outs in model.bath.actions():
        m = len(outs)
        out: dict[int, Fraction] = {}
        for code, w in p.items():
            cur = (code // d**start) % d**width
            base = code - cur * d**start
            share = w / m
            for pick in outs:
                val = sum(a * d**j for j, a in enumerate(pick))
                nc = base + val * d**start
                out[nc] = out.get(nc, Fraction(0)) + share
        p = out
    return p


def exact_chain_columns(model: Model, mode: str, decomp: KrylovDecomposition | None = None,
                        k: int = 1):
    """Exact one-step distributions (as Fraction dicts) from every basis state.

    mode "local": bath kick then k brickwork sweeps; mode "nonlocal": bath
    kick then uniform resample within the Krylov sector.  Tiny L only.
    """
    n = model.n_states
    class_by_code = {}
    for group in model.window_classes():
        for w in group:
            class_by_code[w] = group
    pow_d = [model.d**j for j in range(model.r + 1)]
    cols = []
    for j in range(n):
        p = {j: Fraction(1)}
        p = _apply_bath_exact(p, model)
        if mode == "local":
            for _ in range(k):
                for off in range(model.r):
                    for s in range(off, model.L - model.r + 1, model.r):
                        p = _apply_gate_exact(p, model, s, class_by_code, pow_d)
        elif mode == "nonlocal":
            if decomp is None:
                raise ValueError("nonlocal mode needs a decomposition")
            out: dict[int, Fraction] = {}
            for code, w in p.items():
                sid = int(decomp.sector_of[code])
                states = decomp.states_of(sid)
                share = w / len(states)
                for s2 in states:
                    out[int(s2)] = out.get(int(s2), Fraction(0)) + share
            p = out
        else:
            raise ValueError(mode)
        cols.append(p)
    return cols


def _state_cut_conductance(cols, R_states: frozenset, n: int) -> Fraction:
    """Phi(R) for a state-level chain with uniform stationary measure."""
    flux = Fraction(0)
    for j in R_states:
        for i, w in cols[j].items():
            if i not in R_states:
                flux += w
    return flux / len(R_states)


def local_vs_nonlocal_check(model: Model, decomp: KrylovDecomposition,
                            cut_family: str, k: int = 1):
    """Conductance equality between the local brickwork chain and the
    maximally depolarizing chain on every sector-respecting cut.

    Returns a list of (cut name, phi_local, phi_nonlocal, equal?) with exact
    rationals.
    """
    from .krylov import build_krylov_graph

    graph = build_krylov_graph(decomp)
    fam = CUT_FAMILIES[cut_family](graph)
    loc = exact_chain_columns(model, "local", k=k)
    non = exact_chain_columns(model, "nonlocal", decomp=decomp)
    n = model.n_states
    report = []
    for name, R in fam:
        R = _normalize_R(graph, R)
        R_states = frozenset(
            int(s) for a in R for s in decomp.states_of(a)
        )
        phi_l = _state_cut_conductance(loc, R_states, n)
        phi_n = _state_cut_conductance(non, R_states, n)
        report.append((name, phi_l, phi_n, phi_l == phi_n))
    return report
