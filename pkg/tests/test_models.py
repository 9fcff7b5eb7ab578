"""Configuration packing, rewrite rules, baths, and sector labels."""

import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from fragsim.models import (
    Configuration,
    MODEL_NAMES,
    applicable_moves,
    apply_bath,
    bath_matrix,
    east_regions,
    invariant_label,
    make_bath,
    make_model,
)


@given(
    st.integers(min_value=2, max_value=4).flatmap(
        lambda d: st.tuples(
            st.just(d),
            st.lists(st.integers(0, d - 1), min_size=1, max_size=40),
        )
    )
)
def test_pack_unpack_roundtrip(pair):
    d, letters = pair
    c = Configuration(tuple(letters), d)
    assert Configuration.unpack(c.pack(), len(letters), d) == c


@given(
    st.integers(min_value=2, max_value=5).flatmap(
        lambda d: st.tuples(
            st.just(d),
            st.lists(st.integers(0, d - 1), min_size=1, max_size=20),
        )
    )
)
def test_index_roundtrip(pair):
    d, letters = pair
    c = Configuration(tuple(letters), d)
    idx = c.index()
    assert 0 <= idx < d ** len(letters)
    assert Configuration.from_index(idx, len(letters), d) == c


def test_pack_rejects_large_alphabet():
    with pytest.raises(ValueError):
        Configuration((0, 4), 5).pack()


def test_letter_range_checked():
    with pytest.raises(ValueError):
        Configuration((0, 3), 3)


def test_string_roundtrip_and_aliases():
    c = Configuration.from_string("0ud", "tjz")
    assert c.letters == (0, 1, 2)
    assert c.to_string("tjz") == "0ud"
    assert Configuration.from_string("↑↓", "tjz").letters == (1, 2)
    assert Configuration.from_string("x.•◦", "east").letters == (1, 0, 1, 0)
    assert Configuration.from_string("0+-", "dipole3").letters == (0, 1, 2)
    with pytest.raises(ValueError):
        Configuration.from_string("xyz", "breakdown")


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_rules_are_reversible(name):
    model = make_model(name, 6)
    rules = set(model.rules)
    for a, b in rules:
        assert (b, a) in rules
        assert len(a) == len(b) == model.r


@pytest.mark.parametrize("name,L", [(n, 6) for n in MODEL_NAMES])
def test_rules_preserve_label(name, L):
    model = make_model(name, L)
    rng = np.random.default_rng(3)
    for _ in range(200):
        c = Configuration(tuple(rng.integers(model.d, size=L)), model.d)
        lab = invariant_label(c, model)
        for _, succ in applicable_moves(c, model):
            assert invariant_label(succ, model) == lab


def test_applicable_moves_sites_are_one_based():
    model = make_model("east", 5)
    c = model.config("xx...")
    moves = applicable_moves(c, model)
    assert [(s, cc.to_string("east")) for s, cc in moves] == [(1, "x.x..")]


def test_breakdown_moves():
    model = make_model("breakdown", 3)
    c = Configuration((0, 1, 0), 3)  # one particle on site 2: Q = 2
    succ = {cc.letters for _, cc in applicable_moves(c, model)}
    assert succ == {(2, 0, 0)}  # (0,1) -> (2,0) on the first bond


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_bath_is_doubly_stochastic(name):
    model = make_model(name, 4)
    M = np.array(bath_matrix(model))
    np.testing.assert_allclose(M.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(M.sum(axis=1), 1.0, atol=1e-12)


def test_bath_matrix_exact_mode():
    model = make_model("east", 4)
    M = bath_matrix(model, exact=True)
    n = model.n_states
    for j in range(n):
        assert sum(M[i][j] for i in range(n)) == Fraction(1)


def test_bath_sides():
    b = make_bath("breakdown", 8, "both")
    assert b.sites == (0, 7)
    b = make_bath("tjz", 8)  # tjz default couples on the right
    assert b.side == "right" and b.sites == (7,)
    b = make_bath("dipole3", 8, "both")
    assert b.sites == (0, 1, 6, 7)
    assert b.n_outcomes == 81
    with pytest.raises(ValueError):
        make_bath("east", 8, "right")


def test_east_bath_leaves_first_site_alone():
    model = make_model("east", 5)
    rng = np.random.default_rng(0)
    c = model.config("x.x..")
    for _ in range(20):
        c = apply_bath(c, model.bath, rng)
        assert c.letters[0] == 1


def test_east_regions_basic():
    assert east_regions((1, 0, 0, 0)) == ((1, 1),)
    assert east_regions((1, 1, 0, 0)) == ((1, 3),)
    # second particle at the maximal reach + 1 is still absorbed
    assert east_regions((1, 0, 1, 0)) == ((1, 3),)
    assert east_regions((1, 0, 0, 1)) == ((1, 1), (4, 4))
    assert east_regions((0, 0, 0, 0)) == ()


def test_east_regions_virtual_reach_preserves_n():
    # region jammed against the wall: x_r = x_l + 2N - 2 may exceed L
    regs = east_regions((0, 0, 1, 1))
    assert regs == ((3, 5),)
    N = sum((xr - xl + 2) // 2 for xl, xr in regs)
    assert N == 2


def test_dipole_label_segments():
    model = make_model("dipole3", 6)
    c = model.config("+0+0-0")  # second + is a defect
    defects, segments = invariant_label(c, model)
    assert defects == (1,)
    assert len(segments) == 2
    # segment charges sum to the global charge
    assert sum(q for q, _ in segments) == 1


def test_dipole4_label_is_global():
    model = make_model("dipole4", 6)
    c = model.config("+--+00")
    assert invariant_label(c, model) == (0, 0)
    assert invariant_label(model.config("000000"), model) == (0, 0)


def test_window_classes_partition():
    for name in MODEL_NAMES:
        model = make_model(name, 6)
        classes = model.window_classes()
        seen = sorted(w for g in classes for w in g)
        assert seen == list(range(model.d**model.r))


def test_pairflip_q3():
    model = make_model("pairflip", 4, {"q": 3})
    assert model.d == 3
    c = Configuration((0, 0, 1, 2), 3)
    succ = {cc.letters for _, cc in applicable_moves(c, model)}
    assert (1, 1, 1, 2) in succ and (2, 2, 1, 2) in succ


def test_make_model_validation():
    with pytest.raises(ValueError):
        make_model("nosuch", 4)
    with pytest.raises(ValueError):
        make_model("pairflip", 4, {"q": 1})
    with pytest.raises(ValueError):
        make_model("east", 1)


def test_model_config_length_check():
    model = make_model("tjz", 4)
    with pytest.raises(ValueError):
        model.config("0ud")
