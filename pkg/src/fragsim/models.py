"""Constraint models on a 1D chain: configurations, rewrite rules, baths, labels.

Six models are provided, all defined by reversible local rewrite rules on a
length-L chain over a d-letter alphabet:

``breakdown``
    d=3 occupations n_i in {0,1,2}; the move (0,n+1) <-> (2,n) conserves the
    exponentially weighted charge Q = sum_i 2^(i-1) n_i.
``tjz``
    d=3 letters {empty, up, down}; spins hop through empty sites but never
    pass each other, so the spin pattern is conserved.
``pairflip``
    q colors; an adjacent equal-color pair may flip to any other color,
    conserving the stack-reduced word.
``dipole3``
    spin-1 letters {0,+,-}; three-site moves conserving charge and dipole
    moment (0-0 <-> -+-, 0+0 <-> +-+, 0-+ <-> -+0, 0+- <-> +-0).
``dipole4``
    same alphabet with four-site gates mixing all window configurations of
    equal (charge, dipole).
``east``
    d=2 occupations; a particle hops right only when the site to its left is
    occupied (range-1 facilitation).

Boundary baths resample designated edge sites uniformly; every bath map is
doubly stochastic on the full configuration space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

MODEL_NAMES = ("breakdown", "tjz", "pairflip", "dipole3", "dipole4", "east")

# pretty characters for to_string/from_string, per model
_CHARS = {
    "breakdown": "012",
    "tjz": "0ud",
    "pairflip": "rgbcmyk",  # first q letters used
    "dipole3": "0+-",
    "dipole4": "0+-",
    "east": ".x",
}
_ALIASES = {"•": "x", "◦": ".", "↑": "u", "↓": "d"}  # • ◦ ↑ ↓

# signed charge of each dipole-model letter
_DIPOLE_CHARGE = (0, 1, -1)


@dataclass(frozen=True)
class Configuration:
    """A basis state: a length-L tuple of letters in 0..d-1."""

    letters: tuple[int, ...]
    d: int

    def __post_init__(self):
        if any(not 0 <= a < self.d for a in self.letters):
            raise ValueError("letter out of range")

    def __len__(self):
        return len(self.letters)

    def pack(self) -> int:
        """Pack into an integer at 2 bits/site (requires d <= 4)."""
        if self.d > 4:
            raise ValueError("2-bit packing requires d <= 4")
        code = 0
        for i, a in enumerate(self.letters):
            code |= a << (2 * i)
        return code

    @classmethod
    def unpack(cls, code: int, L: int, d: int) -> "Configuration":
        letters = tuple((code >> (2 * i)) & 3 for i in range(L))
        return cls(letters, d)

    def index(self) -> int:
        """Mixed-radix (base-d, site 0 least significant) dense index."""
        code = 0
        for a in reversed(self.letters):
            code = code * self.d + a
        return code

    @classmethod
    def from_index(cls, code: int, L: int, d: int) -> "Configuration":
        letters = []
        for _ in range(L):
            letters.append(code % d)
            code //= d
        return cls(tuple(letters), d)

    def to_string(self, model_name: str) -> str:
        chars = _CHARS[model_name]
        return "".join(chars[a] for a in self.letters)

    @classmethod
    def from_string(cls, s: str, model_name: str) -> "Configuration":
        chars = _CHARS[model_name]
        d = 2 if model_name == "east" else (3 if model_name != "pairflip" else len(chars))
        letters = []
        for c in s:
            c = _ALIASES.get(c, c)
            if c not in chars:
                raise ValueError(f"letter {c!r} not valid for {model_name}")
            letters.append(chars.index(c))
        # pairflip configs narrow d to the largest color + 1 only via Model;
        # standalone parsing keeps the full palette.
        return cls(tuple(letters), d)


@dataclass(frozen=True)
class BathSpec:
    """Boundary resampling channel.

    semantics:
      - "uniform-resample": each listed site independently resampled
        uniformly over the full alphabet;
      - "east-second-site": site 2 resampled over {0,1}, site 1 never touched
        (it stays occupied for any dynamics started from an occupied edge);
      - "dipole-two-site": the two listed edge sites jointly resampled
        uniformly over all d^2 combinations.
    """

    side: str  # left | right | both
    sites: tuple[int, ...]  # 0-based resampled sites
    semantics: str
    d: int

    def actions(self) -> list[tuple[int, int, tuple[tuple[int, ...], ...]]]:
        """Elementary resampling actions as (start, width, outcome tuple).

        One bath kick applies every action once, in order.  Outcomes of one
        action are equiprobable.
        """
        acts = []
        if self.semantics == "uniform-resample":
            for s in self.sites:
                acts.append((s, 1, tuple((a,) for a in range(self.d))))
        elif self.semantics == "east-second-site":
            acts.append((self.sites[0], 1, ((0,), (1,))))
        elif self.semantics == "dipole-two-site":
            outs = tuple(itertools.product(range(self.d), repeat=2))
            # sites come in adjacent pairs (left pair and/or right pair)
            for s in self.sites[::2]:
                acts.append((s, 2, outs))
        else:
            raise ValueError(f"unknown bath semantics {self.semantics}")
        return acts

    @property
    def n_outcomes(self) -> int:
        n = 1
        for _, _, outs in self.actions():
            n *= len(outs)
        return n


@dataclass(frozen=True)
class Model:
    """A constraint system: alphabet, rewrite rules, bath placement, label kind."""

    name: str
    d: int
    L: int
    r: int  # rule window size
    rules: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    bath: BathSpec
    label_kind: str
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def config(self, s: str) -> Configuration:
        c = Configuration.from_string(s, self.name)
        if len(c) != self.L:
            raise ValueError(f"expected length {self.L}, got {len(c)}")
        if any(a >= self.d for a in c.letters):
            raise ValueError("letter out of range for model")
        return Configuration(c.letters, self.d)

    @property
    def n_states(self) -> int:
        return self.d**self.L

    def window_classes(self) -> list[list[int]]:
        """Connected classes of r-site window indices under the rules.

        Gate semantics: a bulk gate resamples its window uniformly within the
        class of the current window configuration (App-style circuit-averaged
        stochastic gate).  Classes of size 1 are frozen windows.
        """
        return _window_classes(self.name, self.d, self.r, self.rules)


@lru_cache(maxsize=None)
def _window_classes(name, d, r, rules):
    n = d**r
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def _widx(pat):
        code = 0
        for a in reversed(pat):
            code = code * d + a
        return code

    for a, b in rules:
        ra, rb = find(_widx(a)), find(_widx(b))
        if ra != rb:
            parent[ra] = rb
    groups: dict[int, list[int]] = {}
    for w in range(n):
        groups.setdefault(find(w), []).append(w)
    return [sorted(g) for g in groups.values()]


def _dipole_window_rules(d: int, r: int):
    """All ordered pairs of distinct r-site windows with equal (charge, dipole)."""
    classes: dict[tuple[int, int], list[tuple[int, ...]]] = {}
    for pat in itertools.product(range(d), repeat=r):
        q = sum(_DIPOLE_CHARGE[a] for a in pat)
        p = sum((i + 1) * _DIPOLE_CHARGE[a] for i, a in enumerate(pat))
        classes.setdefault((q, p), []).append(pat)
    rules = []
    for group in classes.values():
        for a in group:
            for b in group:
                if a != b:
                    rules.append((a, b))
    return tuple(sorted(rules))


_DIPOLE3_MOVES = [("0-0", "-+-"), ("0+0", "+-+"), ("0-+", "-+0"), ("0+-", "+-0")]


def _parse_pat(s: str, name: str) -> tuple[int, ...]:
    return tuple(Configuration.from_string(s, name).letters)


def _model_rules(name: str, q: int = 2):
    if name == "breakdown":
        # (0, n+1) <-> (2, n): two particles on site i for one on site i+1
        pairs = [((0, n + 1), (2, n)) for n in range(2)]
    elif name == "tjz":
        pairs = [((0, s), (s, 0)) for s in (1, 2)]
    elif name == "pairflip":
        pairs = [((a, a), (b, b)) for a in range(q) for b in range(q) if a < b]
    elif name == "dipole3":
        pairs = [(_parse_pat(a, name), _parse_pat(b, name)) for a, b in _DIPOLE3_MOVES]
    elif name == "dipole4":
        return _dipole_window_rules(3, 4)
    elif name == "east":
        pairs = [((1, 1, 0), (1, 0, 1))]
    else:
        raise ValueError(f"unknown model {name!r}")
    rules = []
    for a, b in pairs:
        rules.append((a, b))
        rules.append((b, a))
    return tuple(sorted(rules))


def make_bath(name: str, L: int, side: str | None = None, q: int = 2) -> BathSpec:
    """The model's boundary bath; ``side`` in {left, right, both} (model default if None)."""
    d = q if name == "pairflip" else (2 if name == "east" else 3)
    if name == "east":
        if side not in (None, "left"):
            raise ValueError("east bath couples at the left edge only")
        return BathSpec("left", (1,), "east-second-site", d)
    if name in ("dipole3", "dipole4"):
        side = side or "left"
        sites = {"left": (0, 1), "right": (L - 2, L - 1), "both": (0, 1, L - 2, L - 1)}[side]
        return BathSpec(side, sites, "dipole-two-site", d)
    side = side or ("right" if name == "tjz" else "left")
    sites = {"left": (0,), "right": (L - 1,), "both": (0, L - 1)}[side]
    return BathSpec(side, sites, "uniform-resample", d)


def make_model(name: str, L: int, params: dict | None = None) -> Model:
    """Build a fully populated model; params: {"q": colors} for pairflip,
    {"bath_side": "left"|"right"|"both"} to move the bath."""
    params = dict(params or {})
    if name not in MODEL_NAMES:
        raise ValueError(f"unknown model {name!r}")
    q = int(params.get("q", 2))
    if name == "pairflip" and q < 2:
        raise ValueError("pairflip needs q >= 2 colors")
    r = {"breakdown": 2, "tjz": 2, "pairflip": 2, "dipole3": 3, "dipole4": 4, "east": 3}[name]
    if L < 2:
        raise ValueError("need L >= 2")
    d = q if name == "pairflip" else (2 if name == "east" else 3)
    label_kind = {
        "breakdown": "charge",
        "tjz": "spin-pattern",
        "pairflip": "reduced-word",
        "dipole3": "dipole",
        "dipole4": "dipole-global",
        "east": "east-regions",
    }[name]
    bath = make_bath(name, L, params.get("bath_side"), q=q)
    return Model(name, d, L, r, _model_rules(name, q), bath, label_kind, params)


def applicable_moves(config: Configuration, model: Model) -> list[tuple[int, Configuration]]:
    """All one-rule-at-one-site successors as (1-based window start, config).

    Ordering is deterministic: by site, then by rule index.
    """
    out = []
    letters = config.letters
    for s in range(model.L - model.r + 1):
        window = letters[s : s + model.r]
        for a, b in model.rules:
            if window == a:
                new = letters[:s] + b + letters[s + model.r :]
                out.append((s + 1, Configuration(new, model.d)))
    return out


def apply_bath(config: Configuration, bath: BathSpec, rng: np.random.Generator) -> Configuration:
    """One bath kick: resample the bath's target sites uniformly."""
    letters = list(config.letters)
    for start, width, outcomes in bath.actions():
        pick = outcomes[rng.integers(len(outcomes))]
        letters[start : start + width] = pick
    return Configuration(tuple(letters), config.d)


# ---------------------------------------------------------------------------
# conserved sector labels


def _breakdown_charge(letters) -> int:
    return sum(n << i for i, n in enumerate(letters))


def _spin_pattern(letters) -> tuple[int, ...]:
    return tuple(a for a in letters if a != 0)


def _reduced_word(letters) -> tuple[int, ...]:
    stack: list[int] = []
    for a in letters:
        if stack and stack[-1] == a:
            stack.pop()
        else:
            stack.append(a)
    return tuple(stack)


def _dipole_label(letters):
    """(defect spins, per-segment (charge, dipole)) for the dipole models.

    A defect is a non-empty site whose nearest non-empty neighbor to the left
    carries the same spin.  Defects cut the chain into segments (each defect
    starts a new segment at its own site); charge cannot cross a defect, so
    each segment's charge and dipole moment are conserved even as the defect
    itself wanders.
    """
    spins = [_DIPOLE_CHARGE[a] for a in letters]
    defect_spins = []
    boundaries = [0]
    prev = 0
    for i, s in enumerate(spins):
        if s == 0:
            continue
        if prev != 0 and s == prev:
            defect_spins.append(s)
            boundaries.append(i)
        prev = s
    boundaries.append(len(letters))
    segments = []
    for k in range(len(boundaries) - 1):
        lo, hi = boundaries[k], boundaries[k + 1]
        qk = sum(spins[lo:hi])
        pk = sum((i + 1) * spins[i] for i in range(lo, hi))
        segments.append((qk, pk))
    return (tuple(defect_spins), tuple(segments))


def east_regions(letters) -> tuple[tuple[int, int], ...]:
    """Maximal thermal regions of an East configuration as (x_l, x_r) pairs.

    Sites are 1-based.  A region of N particles anchored at x_l can spread
    its rightmost particle to x_l + 2N - 2 (most dilute arrangement); a
    particle there or one site beyond is absorbed into the region.  x_r is
    the virtual maximal reach x_l + 2N - 2, which may exceed L for a region
    jammed against the right wall (keeping N recoverable from the label).
    """
    regions = []
    x_l = n = None
    for i, a in enumerate(letters):
        if a == 0:
            continue
        pos = i + 1
        # a particle within the region's maximal extension + 1 hole is
        # absorbed: the region can spread out to touch it
        if x_l is not None and pos <= x_l + 2 * n:
            n += 1
        else:
            if x_l is not None:
                regions.append((x_l, x_l + 2 * n - 2))
            x_l, n = pos, 1
    if x_l is not None:
        regions.append((x_l, x_l + 2 * n - 2))
    return tuple(regions)


def invariant_label(config: Configuration, model: Model):
    """The model's conserved sector identifier for ``config``."""
    letters = config.letters
    if model.label_kind == "charge":
        return _breakdown_charge(letters)
    if model.label_kind == "spin-pattern":
        return _spin_pattern(letters)
    if model.label_kind == "reduced-word":
        return _reduced_word(letters)
    if model.label_kind == "dipole":
        return _dipole_label(letters)
    if model.label_kind == "dipole-global":
        # four-site gates create defect pairs from the vacuum, so only the
        # global charge and dipole moment survive as a label
        spins = [_DIPOLE_CHARGE[a] for a in letters]
        return (sum(spins), sum((i + 1) * s for i, s in enumerate(spins)))
    if model.label_kind == "east-regions":
        return east_regions(letters)
    raise ValueError(model.label_kind)


def bath_matrix(model: Model, exact: bool = False):
    """Exact one-kick transition matrix of the bath on the full space.

    Returns a dense (n, n) array, column-stochastic orientation
    M[to, from].  With ``exact`` entries are Fractions.  Small L only.
    """
    n = model.n_states
    d, L = model.d, model.L
    if exact:
        M = [[Fraction(0)] * n for _ in range(n)]
    else:
        M = np.zeros((n, n))
    for j in range(n):
        c = Configuration.from_index(j, L, d)
        outs = [c.letters]
        weight = Fraction(1)
        for start, width, outcomes in model.bath.actions():
            weight /= len(outcomes)
            new_outs = []
            for base in outs:
                for pick in outcomes:
                    new_outs.append(base[:start] + pick + base[start + width :])
            outs = new_outs
        for letters in outs:
            i = Configuration(letters, d).index()
            if exact:
                M[i][j] += weight
            else:
                M[i][j] += float(weight)
    return M
