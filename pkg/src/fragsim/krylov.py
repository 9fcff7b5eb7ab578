"""Exact Krylov-sector enumeration and bath-induced Krylov graphs.

Sectors are the connected components of the configuration space under the
model's bulk rewrite rules.  Enumeration is vectorized: all d^L states are
indexed densely (base-d), rule applications are computed as arithmetic on the
whole index array at once, and components come from a sparse union over the
resulting edge list.

The Krylov graph coarse-grains the exact bath transition matrix: the edge
weight from sector A to sector B is the number of (state in A, bath outcome
landing in B) pairs, stored as integers so edge probabilities are available
as exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .models import BathSpec, Configuration, Model, invariant_label

ENUMERATION_CAP = 5_000_000


class StateSpaceTooLarge(ValueError):
    pass


def _all_letters(n: int, L: int, d: int) -> np.ndarray:
    """(n, L) array of digits; column i is site i (base-d, site 0 least significant)."""
    codes = np.arange(n, dtype=np.int64)
    out = np.empty((n, L), dtype=np.int8)
    for i in range(L):
        out[:, i] = (codes // d**i) % d
    return out


@dataclass
class KrylovDecomposition:
    """Partition of all d^L configurations into dynamical sectors."""

    model: Model
    sector_of: np.ndarray  # (d^L,) int32 sector ids
    sizes: np.ndarray  # (n_sectors,) int64
    labels: list  # sector id -> SectorLabel

    @property
    def n_sectors(self) -> int:
        return len(self.sizes)

    def states_of(self, sector: int) -> np.ndarray:
        return np.nonzero(self.sector_of == sector)[0]

    def sector_of_config(self, config: Configuration) -> int:
        return int(self.sector_of[config.index()])

    def to_jsonl(self, fh):
        import json

        for sid in range(self.n_sectors):
            fh.write(
                json.dumps(
                    {"sector_id": sid, "size": int(self.sizes[sid]), "label": _label_json(self.labels[sid])}
                )
                + "\n"
            )


def _label_json(label):
    if isinstance(label, tuple):
        return [_label_json(x) for x in label]
    return label


def enumerate_sectors(model: Model) -> KrylovDecomposition:
    """BFS-equivalent exact decomposition of the full configuration space."""
    n = model.n_states
    if n > ENUMERATION_CAP:
        raise StateSpaceTooLarge(f"d^L = {n} exceeds enumeration cap {ENUMERATION_CAP}")
    d, L, r = model.d, model.L, model.r
    letters = _all_letters(n, L, d)
    codes = np.arange(n, dtype=np.int64)

    rows, cols = [], []
    seen = set()
    for a, b in model.rules:
        if (b, a) in seen:
            continue  # undirected edges: one direction suffices
        seen.add((a, b))
        for s in range(L - r + 1):
            mask = np.ones(n, dtype=bool)
            for j in range(r):
                mask &= letters[:, s + j] == a[j]
            if not mask.any():
                continue
            delta = sum((b[j] - a[j]) * d ** (s + j) for j in range(r))
            src = codes[mask]
            rows.append(src)
            cols.append(src + delta)
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        adj = sp.coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    else:
        adj = sp.coo_matrix((n, n), dtype=np.int8)
    n_sec, raw = connected_components(adj, directed=False)

    # renumber so that sector ids follow the smallest state index they contain
    first = np.full(n_sec, -1, dtype=np.int64)
    order = []
    for idx, s in enumerate(raw):
        if first[s] < 0:
            first[s] = idx
            order.append(s)
    remap = np.empty(n_sec, dtype=np.int32)
    remap[np.array(order)] = np.arange(n_sec, dtype=np.int32)
    sector_of = remap[raw]
    sizes = np.bincount(sector_of, minlength=n_sec).astype(np.int64)
    reps = np.full(n_sec, -1, dtype=np.int64)
    reps[sector_of[first[np.array(order)]]] = first[np.array(order)]
    labels = [
        invariant_label(Configuration.from_index(int(reps[sid]), L, d), model) for sid in range(n_sec)
    ]
    return KrylovDecomposition(model, sector_of, sizes, labels)


@dataclass
class KrylovGraph:
    """Weighted graph over (possibly packed) sectors with bath transition counts.

    ``counts[a, b]`` is the integer number of (state, outcome) pairs with the
    state in sector a and the bath outcome in sector b; the one-step
    probability is counts[a, b] / (sizes[a] * n_out).  mu(a) = sizes[a] / n_states.
    """

    sizes: np.ndarray  # (n,) int64 sector sizes
    counts: sp.csr_matrix  # (n, n) int64
    n_out: int  # bath outcomes per kick
    n_states: int  # d^L
    labels: list | None = None
    convention: str = "probabilistic"

    @property
    def n_nodes(self) -> int:
        return len(self.sizes)

    @property
    def mu(self) -> np.ndarray:
        return self.sizes / self.n_states

    def prob_matrix(self) -> sp.csr_matrix:
        """Row-stochastic transition matrix (self-loops included)."""
        inv = 1.0 / (self.sizes.astype(float) * self.n_out)
        return sp.diags(inv) @ self.counts.astype(float)

    def edge_prob(self, a: int, b: int) -> Fraction:
        return Fraction(int(self.counts[a, b]), int(self.sizes[a]) * self.n_out)

    def check_stochastic(self, tol: float = 1e-12) -> bool:
        row = np.asarray(self.counts.sum(axis=1)).ravel()
        return bool(np.all(row == self.sizes * self.n_out))

    def check_reversible(self) -> bool:
        """mu-detailed balance <=> integer count matrix is symmetric."""
        diff = self.counts - self.counts.T
        return diff.nnz == 0

    def to_csv(self, fh):
        fh.write("src,dst,prob,mu_src\n")
        coo = self.counts.tocoo()
        mu = self.mu
        for a, b, c in zip(coo.row, coo.col, coo.data):
            p = float(c / (self.sizes[a] * self.n_out))
            fh.write(f"{a},{b},{p!r},{float(mu[a])!r}\n")


def build_krylov_graph(decomp: KrylovDecomposition, bath: BathSpec | None = None) -> KrylovGraph:
    """Coarse-grain the exact bath matrix onto sectors.

    p(A -> B) = (1/|A|) sum_{psi in A} sum_{psi'} M[psi, psi'] [psi' in B],
    accumulated as exact integer outcome counts.
    """
    model = decomp.model
    bath = bath if bath is not None else model.bath
    n, d = model.n_states, model.d
    codes = np.arange(n, dtype=np.int64)
    sec = decomp.sector_of
    n_sec = decomp.n_sectors

    actions = bath.actions()
    # all combined outcomes, one coo accumulation per combination
    combos = [()]
    for _, _, outs in actions:
        combos = [c + (o,) for c in combos for o in outs]
    n_out = len(combos)

    counts = sp.csr_matrix((n_sec, n_sec), dtype=np.int64)
    ones = np.ones(n, dtype=np.int64)
    for combo in combos:
        new = codes
        for (start, width, _), pick in zip(actions, combo):
            cur = (new // d**start) % d**width
            val = sum(a * d**j for j, a in enumerate(pick))
            new = new + (val - cur) * d**start
        counts = counts + sp.coo_matrix((ones, (sec, sec[new])), shape=(n_sec, n_sec)).tocsr()
    return KrylovGraph(decomp.sizes.copy(), counts, n_out, n, labels=list(decomp.labels))


def east_packed_key(label) -> tuple[int, int]:
    """(total particle number N, maximal reach x) from an east region label."""
    N = sum((xr - xl + 2) // 2 for xl, xr in label)
    x = label[-1][1] if label else 0
    return (N, x)


_PACK_SCHEMES = {
    "identity": lambda label: label,
    "east-(N,x)": east_packed_key,
    "group-element": lambda label: label,  # merge sectors sharing a reduced word
}


def pack_sectors(graph: KrylovGraph, scheme: str) -> KrylovGraph:
    """Merge graph nodes sharing a packing key; weights and counts aggregate."""
    if scheme not in _PACK_SCHEMES:
        raise ValueError(f"unknown packing scheme {scheme!r}")
    if graph.labels is None:
        raise ValueError("graph has no node labels to pack on")
    keyfn = _PACK_SCHEMES[scheme]
    keys = [keyfn(lab) for lab in graph.labels]
    uniq = sorted(set(keys))
    idx = {k: i for i, k in enumerate(uniq)}
    group = np.array([idx[k] for k in keys], dtype=np.int64)
    m = len(uniq)
    agg = sp.coo_matrix(
        (np.ones(graph.n_nodes, dtype=np.int64), (group, np.arange(graph.n_nodes))),
        shape=(m, graph.n_nodes),
    ).tocsr()
    sizes = np.asarray(agg @ graph.sizes).ravel()
    counts = agg @ graph.counts @ agg.T
    return KrylovGraph(sizes, counts.tocsr(), graph.n_out, graph.n_states, labels=uniq)


def detect_fragile(decomp: KrylovDecomposition) -> list:
    """Labels whose equivalence class splits into >= 2 dynamical sectors."""
    seen: dict = {}
    for lab in decomp.labels:
        seen[lab] = seen.get(lab, 0) + 1
    return [lab for lab, k in seen.items() if k >= 2]
