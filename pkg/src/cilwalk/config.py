"""Experiment configuration: TOML parsing, validation, sweep expansion.

A config file fully determines all outputs; runs write into
content-addressed directories keyed by the hash of the resolved
configuration, so identical configs map to identical payload bytes.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .adversary import AdversaryConfig
from .engine import CilConfig, DecaforkConfig
from .errors import ConfigError
from .graph import GraphSpec, generate_topology
from .learn import LearnProblem, SgdConfig, synthetic_regression
from .rng import substream_seed

_GRAPH_KEYS = {"topology", "nodes", "seed", "degree", "edge_probability", "pi"}
_ADV_KEYS = {"pacman_nodes", "pacman_count", "zeta"}
_CIL_KEYS = {
    "threshold",
    "creation_probability",
    "initial_walks",
    "horizon",
    "seed",
    "replications",
    "placement",
}
_LEARN_KEYS = {
    "dimension",
    "data_seed",
    "noise",
    "schedule",
    "gamma0",
    "tau",
    "eta",
}
_BASELINE_KEYS = {"type", "epsilon", "target_count", "gap_window", "steps"}
_VERIFY_KEYS = {
    "checks",
    "epsilon",
    "min_bin_count",
    "rate_tolerance",
    "renewal_tolerance",
    "envelope_factor",
}


def load_config(path: str | Path) -> dict:
    """Parse and validate a TOML experiment file into a plain dict."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {p}: {exc}") from exc
    validate_config(raw)
    return raw


def validate_config(cfg: dict) -> None:
    for section in ("graph", "cil"):
        if section not in cfg:
            raise ConfigError(f"missing required [{section}] section")
    _check_keys(cfg["graph"], _GRAPH_KEYS, "graph")
    _check_keys(cfg.get("adversary", {}), _ADV_KEYS, "adversary")
    _check_keys(cfg["cil"], _CIL_KEYS, "cil")
    _check_keys(cfg.get("learn", {}), _LEARN_KEYS, "learn")
    _check_keys(cfg.get("baseline", {}), _BASELINE_KEYS, "baseline")
    _check_keys(cfg.get("verify", {}), _VERIFY_KEYS, "verify")
    for key in cfg.get("sweep", {}):
        if not isinstance(cfg["sweep"][key], list):
            raise ConfigError(f"sweep values must be lists: {key}")
        head = key.split(".")[0]
        if head not in ("graph", "adversary", "cil", "learn", "baseline"):
            raise ConfigError(f"cannot sweep over {key!r}")
    # Eagerly build everything once so field errors surface before any run.
    try:
        g = build_graph(cfg)
        build_adversary(cfg, g)
        build_cil(cfg)
        if "learn" in cfg:
            build_sgd(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _check_keys(section: dict, allowed: set, name: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"[{name}] must be a table")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")


def build_graph(cfg: dict) -> GraphSpec:
    gc = cfg["graph"]
    try:
        pi = gc.get("pi")
        return generate_topology(
            gc.get("topology", "complete"),
            int(gc["nodes"]),
            int(gc.get("seed", 0)),
            degree=gc.get("degree"),
            edge_probability=gc.get("edge_probability"),
            pi=None if pi is None else np.asarray(pi, dtype=float),
        )
    except KeyError as exc:
        raise ConfigError(f"[graph] missing key {exc}") from exc


def build_adversary(cfg: dict, g: GraphSpec) -> AdversaryConfig:
    ac = cfg.get("adversary", {})
    if "pacman_nodes" in ac and "pacman_count" in ac:
        raise ConfigError("give either pacman_nodes or pacman_count, not both")
    if "pacman_count" in ac:
        nodes = tuple(range(1, int(ac["pacman_count"]) + 1))
    else:
        nodes = tuple(int(u) for u in ac.get("pacman_nodes", [1]))
    zeta = ac.get("zeta", 1.0)
    if isinstance(zeta, list):
        zeta = tuple(float(z) for z in zeta)
    adv = AdversaryConfig(nodes, zeta)
    for u in nodes:
        if not (1 <= u <= g.node_count):
            raise ConfigError(f"adversarial node {u} outside the graph")
    return adv


def build_cil(cfg: dict) -> CilConfig:
    cc = cfg["cil"]
    try:
        thresholds = cc["threshold"]
        if isinstance(thresholds, list):
            thresholds = np.asarray(thresholds, dtype=np.int64)
        placement = cc.get("placement", "uniform")
        if isinstance(placement, list):
            placement = tuple(int(u) for u in placement)
        return CilConfig(
            thresholds=thresholds,
            creation_probability=float(cc["creation_probability"]),
            initial_walk_count=int(cc["initial_walks"]),
            horizon=int(cc["horizon"]),
            seed=int(cc.get("seed", 0)),
            initial_placement=placement,
        )
    except KeyError as exc:
        raise ConfigError(f"[cil] missing key {exc}") from exc


def build_problem(cfg: dict, g: GraphSpec) -> LearnProblem:
    lc = cfg.get("learn")
    if lc is None:
        raise ConfigError("this command needs a [learn] section")
    return synthetic_regression(
        g.node_count,
        int(lc.get("dimension", 2)),
        int(lc.get("data_seed", 0)),
        noise=float(lc.get("noise", 0.02)),
        pi=g.pi,
    )


def build_sgd(cfg: dict) -> SgdConfig:
    lc = cfg.get("learn", {})
    return SgdConfig(
        schedule=lc.get("schedule", "diminishing"),
        gamma0=float(lc.get("gamma0", 0.3)),
        tau=float(lc.get("tau", 20.0)),
        eta=float(lc.get("eta", 0.05)),
    )


def build_decafork(cfg: dict) -> DecaforkConfig:
    bc = cfg.get("baseline", {})
    cc = cfg["cil"]
    return DecaforkConfig(
        epsilon=float(bc["epsilon"]),
        target_count=float(bc["target_count"]),
        initial_walk_count=int(cc["initial_walks"]),
        horizon=int(cc["horizon"]),
        seed=int(cc.get("seed", 0)),
        gap_window=int(bc.get("gap_window", 8)),
    )


def replications(cfg: dict) -> int:
    return int(cfg["cil"].get("replications", 1))


def config_hash(cfg: dict) -> str:
    """Stable content hash of the resolved configuration."""
    payload = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()[:12]


@dataclass(frozen=True)
class SweepPoint:
    index: int
    label: str
    overrides: dict
    config: dict
    seed: int


def expand_sweep(cfg: dict) -> list[SweepPoint]:
    """Cartesian product over the [sweep] lists, one derived seed each.

    Point seeds are derived from the master seed and the point index, so
    points are mutually independent and reproducible in isolation.
    """
    sweep = cfg.get("sweep", {})
    if not sweep:
        base = {k: v for k, v in cfg.items() if k != "sweep"}
        return [SweepPoint(0, "p000", {}, base, int(cfg["cil"].get("seed", 0)))]
    keys = sorted(sweep)
    master = int(cfg["cil"].get("seed", 0))
    points = []
    for idx, combo in enumerate(itertools.product(*(sweep[k] for k in keys))):
        sub = json.loads(json.dumps({k: v for k, v in cfg.items() if k != "sweep"}))
        overrides = dict(zip(keys, combo))
        for dotted, value in overrides.items():
            node = sub
            parts = dotted.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
            node[parts[-1]] = value
        seed = substream_seed(master, idx)
        sub["cil"]["seed"] = seed
        validate_config(sub)
        points.append(SweepPoint(idx, f"p{idx:03d}", overrides, sub, seed))
    return points


def output_dir(cfg: dict, base: str | Path) -> Path:
    """Fresh content-addressed directory; existing runs are never touched."""
    root = Path(base)
    root.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    cand = root / h
    k = 0
    while cand.exists():
        k += 1
        cand = root / f"{h}-{k}"
    cand.mkdir()
    return cand
