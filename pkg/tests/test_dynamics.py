"""Trajectory drivers, exact evolution, relaxation times, charge tracking."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fragsim.dynamics import (
    EvolutionOperator,
    ObservableSeries,
    SimulationConfig,
    de_bruijn_dictionary,
    default_init,
    distribution_expectation,
    evolve_distribution,
    relaxation_time,
    run_krylov_walk,
    run_sector_uniform,
    run_trajectories,
    subsystem_charge_track,
    trace_distance_to_uniform,
    traj_seed,
    weight_matrix,
)
from fragsim.krylov import build_krylov_graph, enumerate_sectors
from fragsim.models import make_model


def test_config_validation():
    model = make_model("tjz", 4)
    with pytest.raises(ValueError):
        SimulationConfig(model, mode="nope")
    with pytest.raises(ValueError):
        SimulationConfig(model, steps=0)


def test_traj_seed_distinct():
    seeds = {traj_seed(5, i) for i in range(100)}
    assert len(seeds) == 100
    assert traj_seed(5, 3) == traj_seed(5, 3)


def test_weight_matrix_rejects_mismatch():
    with pytest.raises(ValueError):
        weight_matrix(make_model("east", 4), "Q")


def test_dipole_observable_is_particle_number():
    model = make_model("dipole3", 4)
    w = weight_matrix(model, "N")
    # letters 0 / + / - carry 1 / 2 / 0 particles
    np.testing.assert_array_equal(w[0], [1.0, 2.0, 0.0])
    assert sum(w[i][2] for i in range(4)) == 0  # zero-particle init


def test_run_trajectories_reproducible():
    model = make_model("breakdown", 6)
    cfg = SimulationConfig(model, steps=100, trajectories=8, seed=3)
    a = run_trajectories(cfg, "Q")
    b = run_trajectories(cfg, "Q")
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.stderr, b.stderr)
    assert a.n_traj == 8 and a.mode == "local"


def test_run_trajectories_parallel_agrees(monkeypatch):
    model = make_model("east", 10)
    cfg = SimulationConfig(model, steps=50, trajectories=6, seed=1)
    serial = run_trajectories(cfg, "N")
    monkeypatch.setenv("FRAGSIM_THREADS", "2")
    par = run_trajectories(cfg, "N")
    np.testing.assert_array_equal(serial.mean, par.mean)


def test_east_x_observable():
    model = make_model("east", 12)
    cfg = SimulationConfig(model, steps=30, trajectories=4, seed=2)
    ser = run_trajectories(cfg, "x")
    assert ser.mean[0] == 1.0  # single particle at the wall
    assert np.all(ser.mean >= 1.0)


def test_sector_uniform_runs_and_conserves_time_grid():
    model = make_model("tjz", 5)
    decomp = enumerate_sectors(model)
    cfg = SimulationConfig(model, mode="sector-uniform", steps=40,
                           trajectories=32, seed=9)
    ser = run_sector_uniform(cfg, "m", decomp)
    assert len(ser.t) == 41
    assert ser.mode == "sector-uniform"
    assert ser.mean[0] == 1.0  # all-up start


def test_krylov_walk_record_times():
    model = make_model("breakdown", 6)
    decomp = enumerate_sectors(model)
    graph = build_krylov_graph(decomp)
    vals = np.array([float(lab) for lab in graph.labels])
    times = np.array([0, 1, 5, 25], dtype=np.int64)
    ser = run_krylov_walk(graph, 0, 25, 64, 4, vals, model_name="breakdown",
                          L=6, record_times=times)
    np.testing.assert_array_equal(ser.t, times)
    assert ser.mean[0] == 0.0  # empty chain has Q = 0
    assert ser.mean[-1] > 0.0


def uniform(model):
    return np.full(model.n_states, 1.0 / model.n_states)


@pytest.mark.parametrize("name,L", [("breakdown", 4), ("tjz", 4),
                                    ("dipole3", 4), ("east", 6)])
@pytest.mark.parametrize("mode", ["local", "sector-uniform"])
def test_uniform_is_stationary(name, L, mode):
    model = make_model(name, L)
    decomp = enumerate_sectors(model) if mode == "sector-uniform" else None
    op = EvolutionOperator(model, mode=mode, k=2, decomp=decomp)
    p = op.apply(uniform(model))
    np.testing.assert_allclose(p, uniform(model), atol=1e-15)


def test_trace_distance_monotone():
    model = make_model("tjz", 4)
    op = EvolutionOperator(model, mode="local", k=1)
    p = np.zeros(model.n_states)
    p[17] = 1.0
    last = trace_distance_to_uniform(p)
    for _ in range(60):
        p = op.apply(p)
        cur = trace_distance_to_uniform(p)
        assert cur <= last + 1e-12
        last = cur
    assert last < 0.5  # mixes eventually


def test_evolve_distribution_record_times():
    model = make_model("east", 5)
    op = EvolutionOperator(model, mode="local")
    p0 = np.zeros(model.n_states)
    p0[1] = 1.0
    out = evolve_distribution(p0, op, 10, record_times=[0, 3, 10])
    assert len(out) == 3
    np.testing.assert_array_equal(out[0], p0)
    for p in out:
        assert abs(p.sum() - 1) < 1e-12


def test_evolve_distribution_graph_operator():
    model = make_model("breakdown", 4)
    graph = build_krylov_graph(enumerate_sectors(model))
    p0 = np.zeros(graph.n_nodes)
    p0[0] = 1.0
    p = evolve_distribution(p0, graph, 5000)
    np.testing.assert_allclose(p, graph.mu, atol=1e-3)


def test_distribution_expectation():
    model = make_model("breakdown", 3)
    p = np.zeros(model.n_states)
    c = model.config("012")
    p[c.index()] = 1.0
    assert distribution_expectation(p, model, "Q") == 1 * 2 + 2 * 4


def series(mean):
    mean = np.asarray(mean, dtype=float)
    return ObservableSeries(np.arange(len(mean)), mean, np.zeros_like(mean),
                            "m", 1, "tjz", 4, "local", 1, 0)


def test_relaxation_time_absolute_and_relative():
    s = series([1.0, 0.6, 0.3, 0.05, 0.01])
    r = relaxation_time(s, 0.1, 0.0, kind="absolute")
    assert (r.time, r.censored) == (3, False)
    s2 = series([10.0, 9.95, 9.05, 9.004])
    r2 = relaxation_time(s2, 0.1, 9.0, kind="relative")
    assert r2.time == 2  # threshold 0.9


def test_relaxation_time_censored():
    r = relaxation_time(series([1.0, 0.9, 0.8]), 0.1, 0.0)
    assert r.censored and r.time is None and r.horizon == 2
    with pytest.raises(ValueError):
        relaxation_time(series([1.0]), 1.5, 0.0)


def test_breakdown_subsystem_charge_allowed_set():
    model = make_model("breakdown", 10)
    init = model.config("0120120120")
    res = subsystem_charge_track(model, init, (3, 6), 500, 1, 11)
    assert res.violations == []


def test_dipole_cut_transfer_bound():
    model = make_model("dipole3", 8)
    init = model.config("+-0+-0+-")
    res = subsystem_charge_track(model, init, (3, 6), 500, 1, 11)
    assert res.violations == []
    assert res.cut_transfer.shape == (501, 7)
    assert np.abs(res.cut_transfer).max() <= 2


def test_de_bruijn_dictionary():
    for n in (1, 2, 3, 4, 6):
        word = de_bruijn_dictionary(n)
        assert len(word) == 2**n + n - 1
        assert set(word) <= {1, 2}
        windows = {word[i : i + n] for i in range(2**n)}
        assert len(windows) == 2**n
    with pytest.raises(ValueError):
        de_bruijn_dictionary(0)
