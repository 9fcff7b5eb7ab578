"""Command-line experiment driver.

Commands: sectors, graph, simulate, conductance, spectrum, figures-data.
Outputs are CSV/JSONL with a metadata header embedding the spec hash, the
package version, and the seed; the timestamp line is the only
non-deterministic output line, so reruns of the same spec + seed produce
byte-identical bodies.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .counting import east_conductance, east_conductance_asymptotic
from .dynamics import (
    ObservableSeries,
    SimulationConfig,
    default_init,
    run_krylov_walk,
    run_sector_uniform,
    run_trajectories,
    weight_matrix,
)
from .krylov import StateSpaceTooLarge, build_krylov_graph, enumerate_sectors, pack_sectors
from .models import make_model
from .spectral import CUT_FAMILIES, cheeger_bound, cut_conductance, min_conductance, spectral_gap


def _spec_hash(spec: dict) -> str:
    canon = json.dumps({k: v for k, v in sorted(spec.items()) if k != "out"}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _header(spec: dict) -> str:
    lines = [
        f"# fragsim v{__version__} spec_hash={_spec_hash(spec)} seed={spec.get('seed', 0)}",
        f"# generated={time.strftime('%Y-%m-%dT%H:%M:%S')}",
    ]
    return "\n".join(lines) + "\n"


def _write(out: str | None, text: str):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _model_from_spec(spec: dict):
    params = dict(spec.get("params") or {})
    if spec.get("bath"):
        params["bath_side"] = spec["bath"]
    if spec.get("q"):
        params["q"] = spec["q"]
    return make_model(spec["model"], int(spec["L"]), params)


def series_csv(series: ObservableSeries) -> str:
    rows = ["t,observable,mean,stderr,n_traj,model,L,mode,k,seed"]
    for t, m, e in zip(series.t, series.mean, series.stderr):
        rows.append(
            f"{int(t)},{series.observable},{float(m)!r},{float(e)!r},{series.n_traj},"
            f"{series.model},{series.L},{series.mode},{series.k},{series.seed}"
        )
    return "\n".join(rows) + "\n"


def cmd_sectors(spec: dict) -> str:
    model = _model_from_spec(spec)
    decomp = enumerate_sectors(model)
    import io

    buf = io.StringIO()
    decomp.to_jsonl(buf)
    return buf.getvalue()


def cmd_graph(spec: dict) -> str:
    model = _model_from_spec(spec)
    decomp = enumerate_sectors(model)
    graph = build_krylov_graph(decomp)
    if spec.get("pack"):
        graph = pack_sectors(graph, spec["pack"])
    import io

    buf = io.StringIO()
    graph.to_csv(buf)
    return buf.getvalue()


def sector_node_values(decomp, model, obs: str) -> np.ndarray:
    """Per-sector mean of a linear observable (node values for walk mode)."""
    from .krylov import _all_letters

    w = weight_matrix(model, obs)
    letters = _all_letters(model.n_states, model.L, model.d)
    wflat = np.zeros(model.n_states)
    for i in range(model.L):
        wflat += w[i][letters[:, i]]
    tot = np.bincount(decomp.sector_of, weights=wflat, minlength=decomp.n_sectors)
    return tot / decomp.sizes


def cmd_simulate(spec: dict) -> str:
    model = _model_from_spec(spec)
    mode = spec.get("mode", "local")
    obs = spec.get("obs", "Q")
    steps = int(float(spec.get("steps", 1000)))
    cfg = SimulationConfig(
        model,
        mode="local" if mode == "krylov-walk" else mode,
        k=int(spec.get("k", 1)),
        steps=steps,
        trajectories=int(spec.get("traj", 100)),
        seed=int(spec.get("seed", 0)),
        init=spec.get("init"),
        bath_enabled=bool(spec.get("bath_enabled", True)),
    )
    if mode == "local":
        series = run_trajectories(cfg, obs)
    elif mode == "sector-uniform":
        decomp = enumerate_sectors(model)
        series = run_sector_uniform(cfg, obs, decomp)
    elif mode == "krylov-walk":
        decomp = enumerate_sectors(model)
        graph = build_krylov_graph(decomp)
        start = decomp.sector_of_config(
            model.config(spec["init"]) if spec.get("init") else default_init(model)
        )
        vals = sector_node_values(decomp, model, obs)
        rec = spec.get("record_times")
        series = run_krylov_walk(
            graph, start, steps, cfg.trajectories, cfg.seed, vals,
            model_name=model.name, L=model.L,
            record_times=np.asarray(rec, dtype=np.int64) if rec else None,
        )
        series.observable = obs
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return series_csv(series)


def cmd_conductance(spec: dict) -> str:
    convention = spec.get("convention", "probabilistic")
    rows = ["model,L,convention,cut_id,phi,cheeger_bound"]
    if spec.get("N0"):
        # closed-form bounded-region value for the east model
        n0 = int(spec["N0"])
        phi = east_conductance(n0) if convention == "combinatorial" else east_conductance_asymptotic(n0)
        rows.append(f"east,{2*n0},{convention},bounded-region,{phi},{cheeger_bound(phi)!r}")
        return "\n".join(rows) + "\n"
    model = _model_from_spec(spec)
    decomp = enumerate_sectors(model)
    graph = build_krylov_graph(decomp)
    family = spec.get("cut_family") or {
        "tjz": "tree-branch",
        "breakdown": "line-prefix",
        "east": "east-halfplane",
    }.get(model.name, "tree-branch")
    if family == "east-halfplane":
        graph = pack_sectors(graph, "east-(N,x)")
    for name, R in CUT_FAMILIES[family](graph):
        phi = cut_conductance(graph, R, convention)
        rows.append(f"{model.name},{model.L},{convention},{name},{phi},{cheeger_bound(phi)!r}")
    return "\n".join(rows) + "\n"


def cmd_spectrum(spec: dict) -> str:
    model = _model_from_spec(spec)
    decomp = enumerate_sectors(model)
    graph = build_krylov_graph(decomp)
    P = graph.prob_matrix()
    lam2, mix = spectral_gap(P, graph.mu)
    family = spec.get("cut_family", "line-prefix" if model.name == "breakdown" else "tree-branch")
    phi_star, _ = min_conductance(graph, family)
    report = {
        "model": model.name,
        "L": model.L,
        "lambda2": lam2,
        "mixing_estimate": mix,
        "min_family_phi": str(phi_star),
        "cheeger_bound": cheeger_bound(phi_star),
        "relation_ok": bool(mix >= 1.0 / (2 * float(phi_star))),
    }
    return json.dumps(report, indent=2) + "\n"


def cmd_figures_data(spec: dict) -> str:
    """Run the canned experiment specs, writing one CSV per experiment."""
    exp_dir = Path(spec.get("experiments_dir", Path(__file__).resolve().parents[2] / "experiments"))
    out_dir = Path(spec.get("out_dir", "figures-data"))
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for path in sorted(exp_dir.glob("*.json")):
        sub = json.loads(path.read_text())
        if spec.get("only") and path.stem not in spec["only"]:
            continue
        body = COMMANDS[sub["command"]](sub)
        target = out_dir / f"{path.stem}.csv"
        target.write_text(_header(sub) + body)
        names.append(str(target))
    return "\n".join(names) + "\n"


COMMANDS = {
    "sectors": cmd_sectors,
    "graph": cmd_graph,
    "simulate": cmd_simulate,
    "conductance": cmd_conductance,
    "spectrum": cmd_spectrum,
    "figures-data": cmd_figures_data,
}


def run(spec: dict) -> int:
    """Execute one experiment spec; returns process exit status."""
    try:
        cmd = spec.get("command")
        if cmd not in COMMANDS:
            raise ValueError(f"unknown command {cmd!r}")
        body = COMMANDS[cmd](spec)
    except (ValueError, KeyError, StateSpaceTooLarge) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    out = spec.get("out")
    if cmd == "figures-data":
        sys.stdout.write(body)
    else:
        _write(out, _header(spec) + body)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fragsim", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--model", choices=["breakdown", "tjz", "pairflip", "dipole3", "dipole4", "east"])
    p.add_argument("--L", type=int)
    p.add_argument("--bath", choices=["left", "right", "both"])
    p.add_argument("--mode", choices=["local", "sector-uniform", "krylov-walk"])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--steps", type=float, default=1000)
    p.add_argument("--traj", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float)
    p.add_argument("--obs", default="Q")
    p.add_argument("--q", type=int, help="pairflip colors")
    p.add_argument("--N0", type=int, help="east bounded-region size")
    p.add_argument("--init", help="initial configuration string")
    p.add_argument("--convention", choices=["probabilistic", "combinatorial"])
    p.add_argument("--cut-family", dest="cut_family", choices=sorted(CUT_FAMILIES))
    p.add_argument("--pack", choices=["identity", "east-(N,x)", "group-element"])
    p.add_argument("--out")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--config", help="JSON spec file; flags override its entries")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec: dict = {}
    if args.config:
        spec.update(json.loads(Path(args.config).read_text()))
    for key in ("model", "L", "bath", "mode", "k", "steps", "traj", "seed", "gamma",
                "obs", "q", "N0", "init", "convention", "cut_family", "pack", "out", "out_dir"):
        val = getattr(args, key)
        if val is not None and (key not in spec or val != build_parser().get_default(key)):
            spec[key] = val
    spec["command"] = args.command
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
