"""Discrete-time simulator for self-creating random-walk populations.

Each slot runs a fixed phase order:

1. arrivals — every token that moved onto an adversarial node is
   terminated independently with that node's probability;
2. visit recording — each benign node hosting a surviving token stamps
   its last-visit time and caches a snapshot of one uniformly chosen
   hosted token (model, source id, update counter);
3. lateness — each benign node whose gap exceeds its threshold creates,
   with the creation probability, a clone of its cached snapshot (the
   clone is placed at the node, its parent is the cached source) and
   stamps the visit time on success;
4. movement — every live token samples its next node from the original
   transition matrix; absorption is resolved on arrival next slot.

Population dynamics never read model payloads, so a run with learning
attached follows the identical event path as the same run without it.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adversary import AdversaryConfig
from .graph import GraphSpec
from .learn import LearnProblem, SgdConfig
from .rng import stream


@dataclass
class WalkToken:
    """Public record of one walk: identity, lineage, payload."""

    walk_id: int
    current_node: int
    birth_time: int
    parent_id: int | None = None
    model: np.ndarray | None = None
    local_iteration_count: int = 0


@dataclass
class NodeLedger:
    """Per-node protocol state as visible between slots."""

    node: int
    last_visit: int
    threshold: int
    cached_source: int | None = None
    cached_model: np.ndarray | None = None
    cached_iteration: int = 0


@dataclass(frozen=True)
class CilConfig:
    """Protocol parameters for one simulation run."""

    thresholds: int | np.ndarray
    creation_probability: float
    initial_walk_count: int
    horizon: int
    seed: int
    initial_placement: str | tuple[int, ...] = "uniform"

    def __post_init__(self) -> None:
        a = np.atleast_1d(np.asarray(self.thresholds))
        if np.any(a < 1):
            raise ValueError("thresholds must be >= 1")
        if not (0.0 < self.creation_probability <= 1.0):
            raise ValueError("creation probability must be in (0, 1]")
        if self.initial_walk_count < 1:
            raise ValueError("need at least one initial walk")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")


@dataclass
class PopulationTrace:
    """Full record of a run: population series, lineage forest, events.

    ``death < 0`` marks walks still alive at the horizon.  ``pacman_idle``
    lists (slot, walk) pairs where a live walk sat on an adversarial node
    (possible only when some termination probability is below one).
    """

    horizon: int
    n_nodes: int
    pacman_nodes: tuple[int, ...]
    min_threshold: int
    z_series: np.ndarray
    creations: np.ndarray
    terminations: np.ndarray
    parent: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    birth_node: np.ndarray
    death_node: np.ndarray
    pacman_idle: np.ndarray
    cache_events: tuple[tuple[int, int, int], ...] = ()
    chain_walks: np.ndarray | None = None
    chain_iter: np.ndarray | None = None
    chain_models: np.ndarray | None = None
    cycles: np.ndarray | None = None

    @property
    def walk_count(self) -> int:
        return len(self.parent)

    def token(self, walk_id: int) -> WalkToken:
        pid = int(self.parent[walk_id])
        return WalkToken(
            walk_id=walk_id,
            current_node=int(self.birth_node[walk_id]),
            birth_time=int(self.birth[walk_id]),
            parent_id=None if pid < 0 else pid,
        )


def extinction_intervals(trace: PopulationTrace) -> list[tuple[int, int]]:
    """Maximal runs of slots with zero population, inclusive bounds."""
    z = trace.z_series
    out: list[tuple[int, int]] = []
    start = None
    for t, v in enumerate(z):
        if v == 0 and start is None:
            start = t
        elif v != 0 and start is not None:
            out.append((start, t - 1))
            start = None
    if start is not None:
        out.append((start, len(z) - 1))
    return out


class _UniformBuffer:
    """Sequential uniform draws from a generator, fetched in blocks."""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self._rng = rng
        self._block = block
        self._buf = rng.random(block)
        self._i = 0

    def next(self) -> float:
        if self._i >= self._buf.size:
            self._buf = self._rng.random(self._block)
            self._i = 0
        v = self._buf[self._i]
        self._i += 1
        return v


class Simulation:
    """One run; owns all state, strictly single-threaded."""

    def __init__(
        self,
        g: GraphSpec,
        P: np.ndarray,
        adv: AdversaryConfig,
        cfg: CilConfig,
        *,
        problem: LearnProblem | None = None,
        sgd: SgdConfig | None = None,
        x0: np.ndarray | None = None,
        chain_schedule: np.ndarray | None = None,
        record_cache_events: bool = False,
    ):
        n = g.node_count
        if P.shape != (n, n):
            raise ValueError("transition matrix does not match graph")
        self.g = g
        self.n = n
        self.adv = adv
        self.cfg = cfg
        self.problem = problem
        self.sgd = sgd
        if problem is not None and sgd is None:
            raise ValueError("a learning problem needs an SGD config")
        if sgd is not None and problem is not None:
            sgd.validate_for(problem)

        cum = np.minimum(np.cumsum(P, axis=1), 1.0)
        cum[:, -1] = 1.0
        self._flat_cum = (cum + np.arange(n)[:, None]).ravel()

        self.is_pac = np.zeros(n, dtype=bool)
        self.zeta_node = np.zeros(n)
        for u, z in zip(adv.pacman_nodes, adv.zetas()):
            self.is_pac[u - 1] = True
            self.zeta_node[u - 1] = z
        self._all_lethal = all(z == 1.0 for z in adv.zetas())
        self.benign0 = np.nonzero(~self.is_pac)[0]

        a = np.asarray(cfg.thresholds)
        self.A = np.full(n, np.iinfo(np.int64).max // 2, dtype=np.int64)
        if a.ndim == 0:
            self.A[self.benign0] = int(a)
        else:
            if a.shape != (n,):
                raise ValueError("per-node thresholds must have one entry per node")
            self.A[self.benign0] = a[self.benign0]
        self.min_threshold = int(self.A[self.benign0].min())

        seed = cfg.seed
        self._rng_place = stream(seed, "placement")
        self._rng_move = stream(seed, "movement")
        self._rng_term = stream(seed, "termination")
        self._rng_create = stream(seed, "creation")
        self._rng_cache = stream(seed, "cache")
        self._rng_chain = stream(seed, "chain")

        self.m = problem.dimension if problem is not None else 0
        if x0 is None and problem is not None:
            x0 = np.zeros(self.m)
        self.x0 = None if x0 is None else np.asarray(x0, dtype=float)

        # walk state
        z0 = cfg.initial_walk_count
        if cfg.initial_placement == "uniform":
            nodes0 = self.benign0[
                self._rng_place.integers(0, self.benign0.size, size=z0)
            ]
        else:
            explicit = tuple(cfg.initial_placement)
            if len(explicit) != z0:
                raise ValueError("explicit placement must list one node per walk")
            for u in explicit:
                if self.is_pac[u - 1]:
                    raise ValueError(f"initial walk on adversarial node {u}")
            nodes0 = np.array([u - 1 for u in explicit], dtype=np.int64)
        self.pos = nodes0.astype(np.int64)
        self.wid = np.arange(z0, dtype=np.int64)
        self.iters = np.zeros(z0, dtype=np.int64)
        self.models = (
            np.tile(self.x0, (z0, 1)) if problem is not None else None
        )
        self._next_id = z0

        # node state
        self.last_visit = np.zeros(n, dtype=np.int64)
        self.cache_src = np.full(n, -1, dtype=np.int64)
        self.cache_iter = np.zeros(n, dtype=np.int64)
        self.cache_model = np.zeros((n, self.m)) if problem is not None else None

        # registry
        self._parent = [-1] * z0
        self._birth = [0] * z0
        self._birth_node = [int(v) + 1 for v in nodes0]
        self._death = [-1] * z0
        self._death_node = [-1] * z0

        # records
        T = cfg.horizon
        self.z_series = np.zeros(T, dtype=np.int64)
        self.creation_series = np.zeros(T, dtype=np.int32)
        self.termination_series = np.zeros(T, dtype=np.int32)
        self._pacman_idle: list[tuple[int, int]] = []
        self._cache_events: list[tuple[int, int, int]] = []
        self._record_cache_events = record_cache_events
        self._chain_schedule = chain_schedule
        self.chain_models = (
            np.zeros((T, self.m)) if chain_schedule is not None else None
        )
        self._last_chain_model = (
            self.x0.copy() if chain_schedule is not None else None
        )
        self.t = 0

    # -- state inspection -------------------------------------------------

    def tokens(self) -> list[WalkToken]:
        out = []
        for i in range(self.pos.size):
            w = int(self.wid[i])
            out.append(
                WalkToken(
                    walk_id=w,
                    current_node=int(self.pos[i]) + 1,
                    birth_time=self._birth[w],
                    parent_id=None if self._parent[w] < 0 else self._parent[w],
                    model=None if self.models is None else self.models[i].copy(),
                    local_iteration_count=int(self.iters[i]),
                )
            )
        return out

    def ledger(self, node: int) -> NodeLedger:
        i = node - 1
        src = int(self.cache_src[i])
        return NodeLedger(
            node=node,
            last_visit=int(self.last_visit[i]),
            threshold=int(self.A[i]),
            cached_source=None if src < 0 else src,
            cached_model=(
                None
                if self.cache_model is None or src < 0
                else self.cache_model[i].copy()
            ),
            cached_iteration=int(self.cache_iter[i]),
        )

    def set_population(
        self,
        nodes: list[int],
        last_visit: list[int] | np.ndarray,
        t: int,
        cache_sources: list[int] | None = None,
    ) -> None:
        """Overwrite the walk/node state (test and analysis hook)."""
        self.pos = np.array([u - 1 for u in nodes], dtype=np.int64)
        z = self.pos.size
        self.wid = np.arange(self._next_id, self._next_id + z, dtype=np.int64)
        self._next_id += z
        for u in nodes:
            self._parent.append(-1)
            self._birth.append(t)
            self._birth_node.append(u)
            self._death.append(-1)
            self._death_node.append(-1)
        self.iters = np.zeros(z, dtype=np.int64)
        if self.models is not None:
            self.models = np.tile(self.x0, (z, 1))
        self.last_visit = np.asarray(last_visit, dtype=np.int64).copy()
        if cache_sources is not None:
            self.cache_src = np.asarray(cache_sources, dtype=np.int64).copy()
        self.t = t

    # -- slot execution ---------------------------------------------------

    def step(self) -> dict:
        """Execute one slot; returns the per-slot event record."""
        t = self.t
        terminations = 0
        creations = 0

        # phase 1: resolve arrivals at adversarial nodes
        if t > 0 and self.pos.size:
            pac_mask = self.is_pac[self.pos]
            if pac_mask.any():
                hit = np.nonzero(pac_mask)[0]
                coins = self._rng_term.random(hit.size)
                die = coins < self.zeta_node[self.pos[hit]]
                if die.any():
                    dead = hit[die]
                    for i in dead:
                        w = int(self.wid[i])
                        self._death[w] = t
                        self._death_node[w] = int(self.pos[i]) + 1
                    keep = np.ones(self.pos.size, dtype=bool)
                    keep[dead] = False
                    terminations = int(dead.size)
                    self._compact(keep)

        # arrival computation: surviving tokens on benign nodes take one
        # local gradient step before the node snapshots its visitor
        if self.problem is not None and self.pos.size:
            if self._all_lethal:
                self._apply_updates(slice(None), self.pos)
            else:
                idx = np.nonzero(~self.is_pac[self.pos])[0]
                if idx.size:
                    self._apply_updates(idx, self.pos[idx])

        # phase 2: visit recording and cache refresh
        if self.pos.size:
            if self._all_lethal:
                posb = self.pos
                ben_idx = None
            else:
                ben_tok = ~self.is_pac[self.pos]
                ben_idx = np.nonzero(ben_tok)[0]
                posb = self.pos[ben_idx]
                idle = np.nonzero(~ben_tok)[0]
                for i in idle:
                    self._pacman_idle.append((t, int(self.wid[i])))
            if posb.size:
                counts = np.bincount(posb, minlength=self.n)
                visited = np.nonzero(counts)[0]
                cnt = counts[visited]
                order = np.argsort(posb, kind="stable")
                starts = np.concatenate(([0], np.cumsum(cnt)))[:-1]
                offs = (self._rng_cache.random(visited.size) * cnt).astype(np.int64)
                sel = order[starts + offs]
                if ben_idx is not None:
                    sel = ben_idx[sel]
                self.last_visit[visited] = t
                self.cache_src[visited] = self.wid[sel]
                self.cache_iter[visited] = self.iters[sel]
                if self.cache_model is not None:
                    self.cache_model[visited] = self.models[sel]
                if self._record_cache_events:
                    for j in np.nonzero(cnt > 1)[0]:
                        self._cache_events.append(
                            (t, int(self.wid[sel[j]]), int(visited[j]) + 1)
                        )

        # phase 3: lateness check and creation
        late = np.nonzero((t - self.last_visit) > self.A)[0]
        if late.size:
            coins = self._rng_create.random(late.size)
            made = late[coins < self.cfg.creation_probability]
            if made.size:
                creations = int(made.size)
                srcs = self.cache_src[made]
                have = srcs >= 0
                ids = np.arange(self._next_id, self._next_id + made.size, dtype=np.int64)
                self._next_id += made.size
                new_iters = np.where(have, self.cache_iter[made], 0)
                for k in range(made.size):
                    self._parent.append(int(srcs[k]) if have[k] else -1)
                    self._birth.append(t)
                    self._birth_node.append(int(made[k]) + 1)
                    self._death.append(-1)
                    self._death_node.append(-1)
                old_size = self.pos.size
                self.pos = np.concatenate([self.pos, made])
                self.wid = np.concatenate([self.wid, ids])
                self.iters = np.concatenate([self.iters, new_iters])
                if self.models is not None:
                    new_models = np.where(
                        have[:, None], self.cache_model[made], self.x0[None, :]
                    )
                    self.models = np.concatenate([self.models, new_models])
                    # a newborn performs its birth-slot computation too
                    born = np.arange(old_size, self.pos.size)
                    self._apply_updates(born, made)
                self.last_visit[made] = t

        # bookkeeping at the slot boundary
        z = int(self.pos.size)
        if t < self.cfg.horizon:
            self.z_series[t] = z
            self.creation_series[t] = creations
            self.termination_series[t] = terminations

        if self._chain_schedule is not None and t < self.cfg.horizon:
            w = int(self._chain_schedule[t])
            if w >= 0:
                i = int(np.searchsorted(self.wid, w))
                if i < self.wid.size and self.wid[i] == w:
                    self._last_chain_model = self.models[i].copy()
            self.chain_models[t] = self._last_chain_model

        # phase 4: movement
        if self.pos.size:
            u = self._rng_move.random(self.pos.size)
            q = self.pos + u
            nxt = np.searchsorted(self._flat_cum, q, side="right") - self.pos * self.n
            self.pos = nxt

        self.t = t + 1
        return {"t": t, "z": z, "creations": creations, "terminations": terminations}

    def _apply_updates(self, idx, nodes0: np.ndarray) -> None:
        """One schedule-indexed gradient step for the selected tokens."""
        gam = self.sgd.step_size(self.iters[idx])
        Hn = self.problem.H[nodes0]
        X = self.models[idx]
        res = np.einsum("zrm,zm->zr", Hn, X) - self.problem.y[nodes0]
        self.models[idx] = X - np.asarray(gam)[:, None] * np.einsum(
            "zrm,zr->zm", Hn, res
        )
        self.iters[idx] += 1

    def _compact(self, keep: np.ndarray) -> None:
        self.pos = self.pos[keep]
        self.wid = self.wid[keep]
        self.iters = self.iters[keep]
        if self.models is not None:
            self.models = self.models[keep]

    # -- full run ----------------------------------------------------------

    def run(self) -> PopulationTrace:
        for _ in range(self.cfg.horizon):
            self.step()
        return self._finalize()

    def _finalize(self) -> PopulationTrace:
        trace = PopulationTrace(
            horizon=self.cfg.horizon,
            n_nodes=self.n,
            pacman_nodes=self.adv.pacman_nodes,
            min_threshold=self.min_threshold,
            z_series=self.z_series,
            creations=self.creation_series,
            terminations=self.termination_series,
            parent=np.array(self._parent, dtype=np.int64),
            birth=np.array(self._birth, dtype=np.int64),
            death=np.array(self._death, dtype=np.int64),
            birth_node=np.array(self._birth_node, dtype=np.int64),
            death_node=np.array(self._death_node, dtype=np.int64),
            pacman_idle=np.array(self._pacman_idle, dtype=np.int64).reshape(-1, 2),
            cache_events=tuple(self._cache_events),
            chain_models=self.chain_models,
        )
        if trace.walk_count and self.cfg.horizon:
            chain = spanning_chain(trace, self._rng_chain)
            trace.chain_walks = np.asarray(chain, dtype=np.int64)
            trace.chain_iter = chain_iterations(trace, chain)
        return trace


def run(
    g: GraphSpec,
    P: np.ndarray,
    adv: AdversaryConfig,
    cfg: CilConfig,
    **kwargs,
) -> PopulationTrace:
    """Run the protocol for the configured horizon; deterministic in the seed."""
    return Simulation(g, P, adv, cfg, **kwargs).run()


def replicate(
    g: GraphSpec,
    P: np.ndarray,
    adv: AdversaryConfig,
    cfg: CilConfig,
    n_seeds: int,
    n_jobs: int = 1,
    **kwargs,
) -> list[PopulationTrace]:
    """Independent replications with sub-seeds derived from the master seed.

    Results are returned in replication order regardless of scheduling,
    so the collection is deterministic under any job count.
    """
    from dataclasses import replace

    from joblib import Parallel, delayed

    from .rng import substream_seed

    seeds = [substream_seed(cfg.seed, k) for k in range(n_seeds)]
    if n_jobs == 1:
        return [run(g, P, adv, replace(cfg, seed=s), **kwargs) for s in seeds]
    return Parallel(n_jobs=n_jobs)(
        delayed(run)(g, P, adv, replace(cfg, seed=s), **kwargs) for s in seeds
    )


def run_with_learning(
    g: GraphSpec,
    P: np.ndarray,
    adv: AdversaryConfig,
    cfg: CilConfig,
    problem: LearnProblem,
    sgd: SgdConfig,
    x0: np.ndarray | None = None,
) -> PopulationTrace:
    """Two-pass run that records the surviving lineage's model per slot.

    Population dynamics are payload-independent, so the first (cheap)
    pass fixes the event path and the designated lineage; the second pass
    replays it with models attached and records the lineage's iterate.
    """
    pilot = run(g, P, adv, cfg)
    if pilot.chain_walks is None:
        raise ValueError("no lineage exists; nothing to record")
    schedule = chain_schedule(pilot, list(pilot.chain_walks))
    sim = Simulation(
        g, P, adv, cfg, problem=problem, sgd=sgd, x0=x0, chain_schedule=schedule
    )
    trace = sim.run()
    return trace


# -- lineage analysis -------------------------------------------------------


def _children_lists(trace: PopulationTrace) -> list[list[int]]:
    kids: list[list[int]] = [[] for _ in range(trace.walk_count)]
    for w, p in enumerate(trace.parent):
        if p >= 0:
            kids[p].append(w)
    return kids


def extract_chain(
    trace: PopulationTrace, initial_walk: int, rng: np.random.Generator
) -> list[int]:
    """Follow parent-to-child links, picking uniformly among children.

    Ends when the current walk has no children; a walk with children
    hands off to one uniformly chosen child.
    """
    kids = _children_lists(trace)
    chain = [initial_walk]
    cur = initial_walk
    while kids[cur]:
        cur = kids[cur][int(rng.integers(0, len(kids[cur])))]
        chain.append(cur)
    return chain


def _effective_end(trace: PopulationTrace, w: int) -> int:
    d = int(trace.death[w])
    return trace.horizon if d < 0 else d


def spanning_chain(
    trace: PopulationTrace, rng: np.random.Generator | None = None
) -> list[int]:
    """Lineage from an initial walk whose coverage extends furthest.

    Among children (and roots) tied on reach, picks uniformly when a
    generator is supplied, else the lowest id.
    """
    W = trace.walk_count
    kids = _children_lists(trace)
    reach = np.array([_effective_end(trace, w) for w in range(W)], dtype=np.int64)
    for w in range(W - 1, -1, -1):
        for k in kids[w]:
            if reach[k] > reach[w]:
                reach[w] = reach[k]

    # Roots are parentless walks: the initial population plus any walk a
    # node created before its first-ever visit (empty cache).
    roots = [w for w in range(W) if trace.parent[w] < 0]
    best = max(reach[w] for w in roots)
    top = [w for w in roots if reach[w] == best]
    # Prefer the earliest-born root among those reaching furthest.
    first_birth = min(int(trace.birth[w]) for w in top)
    top = [w for w in top if trace.birth[w] == first_birth]
    cur = top[int(rng.integers(0, len(top)))] if rng is not None else top[0]

    chain = [cur]
    while True:
        own = _effective_end(trace, cur)
        cand = [k for k in kids[cur] if reach[k] == reach[cur]]
        if own >= reach[cur] or not cand:
            break
        cur = cand[int(rng.integers(0, len(cand)))] if rng is not None else cand[0]
        chain.append(cur)
    return chain


def _member_spans(trace: PopulationTrace, chain: list[int]) -> list[tuple[int, int, int]]:
    """(walk, start, end_exclusive) current-member spans along a lineage.

    A member is current from its hand-off time (its birth, or its
    predecessor's death if the birth came earlier) until its own death;
    gaps between a death and the next birth are waiting time.
    """
    spans = []
    prev_end = None
    for s, w in enumerate(chain):
        start = int(trace.birth[w]) if s == 0 else max(prev_end, int(trace.birth[w]))
        end = min(_effective_end(trace, w), trace.horizon)
        spans.append((w, start, end))
        prev_end = _effective_end(trace, w)
    return spans


def chain_schedule(trace: PopulationTrace, chain: list[int]) -> np.ndarray:
    """Current chain member per slot (-1 while waiting)."""
    sched = np.full(trace.horizon, -1, dtype=np.int64)
    for w, start, end in _member_spans(trace, chain):
        if start < end:
            sched[start:end] = w
    return sched


def chain_iterations(trace: PopulationTrace, chain: list[int]) -> np.ndarray:
    """Cumulative local-update count of a lineage, one entry per slot.

    A slot contributes one update when the current member is alive on a
    benign node; waiting slots and adversary-idle slots contribute zero.
    """
    active = np.zeros(trace.horizon, dtype=np.int8)
    spans = _member_spans(trace, chain)
    for w, start, end in spans:
        if start < end:
            active[start:end] = 1
    if trace.pacman_idle.size:
        members = set(chain)
        span_of = {w: (s, e) for w, s, e in spans}
        for t, w in trace.pacman_idle:
            if w in members:
                s, e = span_of[w]
                if s <= t < e:
                    active[t] = 0
    return np.cumsum(active, dtype=np.int64)


# -- dominated single-walk renewal process ---------------------------------


def run_dominated_single(
    g: GraphSpec,
    P: np.ndarray,
    adv: AdversaryConfig,
    cfg: CilConfig,
) -> PopulationTrace:
    """Worst-case renewal process with at most one live walk.

    While a walk lives, creations are suppressed.  After each absorption
    the waiting counters are pessimized: exactly one node is treated as
    freshly visited, so the threshold wait is the full A - 1 slots, after
    which one creation trial fires per slot with the creation
    probability.  Records per-cycle (lifetime, threshold wait, trials).
    """
    a = np.asarray(cfg.thresholds)
    if a.ndim != 0:
        raise ValueError("dominated process needs a uniform threshold")
    A = int(a)
    q = cfg.creation_probability
    T = cfg.horizon
    n = g.node_count

    cum_rows = [list(np.minimum(np.cumsum(P[i]), 1.0)) for i in range(n)]
    for row in cum_rows:
        row[-1] = 1.0
    is_pac = np.zeros(n, dtype=bool)
    zeta = np.zeros(n)
    for u, z in zip(adv.pacman_nodes, adv.zetas()):
        is_pac[u - 1] = True
        zeta[u - 1] = z
    benign0 = np.nonzero(~is_pac)[0]

    place = stream(cfg.seed, "placement")
    move = _UniformBuffer(stream(cfg.seed, "movement"))
    term = _UniformBuffer(stream(cfg.seed, "termination"))
    create = _UniformBuffer(stream(cfg.seed, "creation"))

    z_series = np.zeros(T, dtype=np.int64)
    creations = np.zeros(T, dtype=np.int32)
    terminations = np.zeros(T, dtype=np.int32)
    active = np.zeros(T, dtype=np.int8)
    parent: list[int] = []
    birth: list[int] = []
    birth_node: list[int] = []
    death: list[int] = []
    death_node: list[int] = []
    cycles: list[tuple[int, int, int]] = []

    t = 0
    w = -1
    while t < T:
        # birth
        w += 1
        pos = int(benign0[place.integers(0, benign0.size)])
        parent.append(w - 1)
        birth.append(t)
        birth_node.append(pos + 1)
        death.append(-1)
        death_node.append(-1)
        if w > 0:
            creations[t] += 1
        born = t
        # lifetime
        alive = True
        while alive and t < T:
            z_series[t] = 1
            if not is_pac[pos]:
                active[t] = 1
            pos = bisect_right(cum_rows[pos], move.next())
            t += 1
            if t >= T:
                break
            if is_pac[pos] and term.next() < zeta[pos]:
                alive = False
                death[w] = t
                death_node[w] = pos + 1
                terminations[t] += 1
        if alive:
            break  # horizon reached mid-life
        lifetime = death[w] - born
        # threshold wait pessimized to the full A - 1 slots, then one
        # Bernoulli(q) trial per slot; the new walk starts the slot after
        # the successful trial.
        t = death[w] + A - 1
        if t >= T:
            break
        trials = 0
        made = False
        while t < T:
            trials += 1
            t += 1
            if create.next() < q:
                made = True
                break
        if not made:
            break
        cycles.append((lifetime, A - 1, trials))
        # next birth happens at slot t (loop top)

    return PopulationTrace(
        horizon=T,
        n_nodes=n,
        pacman_nodes=adv.pacman_nodes,
        min_threshold=A,
        z_series=z_series,
        creations=creations,
        terminations=terminations,
        parent=np.array(parent, dtype=np.int64),
        birth=np.array(birth, dtype=np.int64),
        death=np.array(death, dtype=np.int64),
        birth_node=np.array(birth_node, dtype=np.int64),
        death_node=np.array(death_node, dtype=np.int64),
        pacman_idle=np.zeros((0, 2), dtype=np.int64),
        chain_walks=np.arange(len(parent), dtype=np.int64),
        chain_iter=np.cumsum(active, dtype=np.int64),
        cycles=np.array(cycles, dtype=np.int64).reshape(-1, 3),
    )


# -- duplication-based baseline ---------------------------------------------


@dataclass(frozen=True)
class DecaforkConfig:
    """Visit-gap duplication baseline parameters.

    Nodes estimate the live-walk count as (expected return time under the
    target distribution) / (windowed mean inter-visit gap) and duplicate
    a visiting walk with probability epsilon * (target - estimate),
    clipped to [0, 1].
    """

    epsilon: float
    target_count: float
    initial_walk_count: int
    horizon: int
    seed: int
    gap_window: int = 8


def run_decafork_baseline(
    g: GraphSpec,
    P: np.ndarray,
    adv: AdversaryConfig,
    cfg: DecaforkConfig,
) -> PopulationTrace:
    """Duplication-only baseline: no creation from silence.

    Extinct populations stay extinct, which is exactly the failure mode
    the self-creation protocol removes.
    """
    n = g.node_count
    cum = np.minimum(np.cumsum(P, axis=1), 1.0)
    cum[:, -1] = 1.0
    flat_cum = (cum + np.arange(n)[:, None]).ravel()
    is_pac = np.zeros(n, dtype=bool)
    zeta_node = np.zeros(n)
    for u, z in zip(adv.pacman_nodes, adv.zetas()):
        is_pac[u - 1] = True
        zeta_node[u - 1] = z
    benign0 = np.nonzero(~is_pac)[0]
    ret_time = 1.0 / g.pi  # expected return time at each node

    rng_place = stream(cfg.seed, "placement")
    rng_move = stream(cfg.seed, "movement")
    rng_term = stream(cfg.seed, "termination")
    rng_dup = stream(cfg.seed, "creation")
    rng_cache = stream(cfg.seed, "cache")

    T = cfg.horizon
    z0 = cfg.initial_walk_count
    pos = benign0[rng_place.integers(0, benign0.size, size=z0)].astype(np.int64)
    wid = np.arange(z0, dtype=np.int64)
    next_id = z0

    gaps = np.zeros((n, cfg.gap_window))
    gap_count = np.zeros(n, dtype=np.int64)
    last_visit = np.zeros(n, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)

    z_series = np.zeros(T, dtype=np.int64)
    creations = np.zeros(T, dtype=np.int32)
    terminations = np.zeros(T, dtype=np.int32)
    parent = [-1] * z0
    birth = [0] * z0
    birth_node = [int(v) + 1 for v in pos]
    death = [-1] * z0
    death_node = [-1] * z0

    for t in range(T):
        if t > 0 and pos.size:
            pac_mask = is_pac[pos]
            if pac_mask.any():
                hit = np.nonzero(pac_mask)[0]
                coins = rng_term.random(hit.size)
                die = coins < zeta_node[pos[hit]]
                if die.any():
                    dead = hit[die]
                    for i in dead:
                        death[int(wid[i])] = t
                        death_node[int(wid[i])] = int(pos[i]) + 1
                    keep = np.ones(pos.size, dtype=bool)
                    keep[dead] = False
                    terminations[t] = int(dead.size)
                    pos = pos[keep]
                    wid = wid[keep]

        if pos.size:
            counts = np.bincount(pos, minlength=n)
            visited = np.nonzero((counts > 0) & ~is_pac)[0]
            if visited.size:
                cnt = counts[visited]
                order = np.argsort(pos, kind="stable")
                starts_all = np.concatenate(([0], np.cumsum(counts[np.nonzero(counts)[0]])))
                occupied = np.nonzero(counts)[0]
                start_of = dict(zip(occupied.tolist(), starts_all[:-1].tolist()))
                dup_nodes = []
                dup_parents = []
                for j, u in enumerate(visited):
                    gap = t - last_visit[u]
                    if seen[u] and gap > 0:
                        gaps[u, gap_count[u] % cfg.gap_window] = gap
                        gap_count[u] += 1
                    est = None
                    if gap_count[u] > 0:
                        k = min(gap_count[u], cfg.gap_window)
                        mean_gap = gaps[u, :k].mean()
                        est = ret_time[u] / mean_gap
                    pick = order[start_of[u] + int(rng_cache.random() * cnt[j])]
                    if est is not None:
                        p_dup = min(1.0, cfg.epsilon * max(0.0, cfg.target_count - est))
                        if p_dup > 0.0 and rng_dup.random() < p_dup:
                            dup_nodes.append(u)
                            dup_parents.append(int(wid[pick]))
                    seen[u] = True
                    last_visit[u] = t
                if dup_nodes:
                    k = len(dup_nodes)
                    creations[t] = k
                    ids = np.arange(next_id, next_id + k, dtype=np.int64)
                    next_id += k
                    for u, p in zip(dup_nodes, dup_parents):
                        parent.append(p)
                        birth.append(t)
                        birth_node.append(int(u) + 1)
                        death.append(-1)
                        death_node.append(-1)
                    pos = np.concatenate([pos, np.array(dup_nodes, dtype=np.int64)])
                    wid = np.concatenate([wid, ids])

        z_series[t] = pos.size
        if pos.size:
            u = rng_move.random(pos.size)
            pos = np.searchsorted(flat_cum, pos + u, side="right") - pos * n

    return PopulationTrace(
        horizon=T,
        n_nodes=n,
        pacman_nodes=adv.pacman_nodes,
        min_threshold=0,
        z_series=z_series,
        creations=creations,
        terminations=terminations,
        parent=np.array(parent, dtype=np.int64),
        birth=np.array(birth, dtype=np.int64),
        death=np.array(death, dtype=np.int64),
        birth_node=np.array(birth_node, dtype=np.int64),
        death_node=np.array(death_node, dtype=np.int64),
        pacman_idle=np.zeros((0, 2), dtype=np.int64),
    )


# -- export -----------------------------------------------------------------


def trace_to_csv(trace: PopulationTrace, path: str | Path) -> None:
    """Per-slot series: t, z, creations, terminations, iter_t."""
    it = trace.chain_iter
    lines = ["t,z,creations,terminations,iter_t"]
    for t in range(trace.horizon):
        v = int(it[t]) if it is not None else 0
        lines.append(
            f"{t},{trace.z_series[t]},{trace.creations[t]},"
            f"{trace.terminations[t]},{v}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def events_to_jsonl(trace: PopulationTrace, path: str | Path) -> None:
    """Creation/termination/cache-merge events as JSON-lines records."""
    rows = []
    for w in range(trace.walk_count):
        rows.append(
            (int(trace.birth[w]), "created", w, int(trace.birth_node[w]))
        )
        if trace.death[w] >= 0:
            rows.append(
                (int(trace.death[w]), "terminated", w, int(trace.death_node[w]))
            )
    for t, w, node in trace.cache_events:
        rows.append((t, "merged-cache", w, node))
    rows.sort(key=lambda r: (r[0], r[2], r[1]))
    with open(path, "w") as fh:
        for t, kind, w, node in rows:
            fh.write(
                json.dumps({"t": t, "kind": kind, "walk": w, "node": node}) + "\n"
            )
