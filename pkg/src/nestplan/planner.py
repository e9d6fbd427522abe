"""Finite-horizon planning: exact level 0, sample-set value iteration, grid baseline."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import filters
from .errors import BudgetExceededError, DegenerateInputError, LevelMismatchError, ParticleDepletionError
from .model import Frame, ParticleSet, quantize
from .rng import Stream, as_generator, as_stream

OPT_TOL = 1e-9


def opt_distribution(q: np.ndarray) -> np.ndarray:
    """Uniform distribution over every action within OPT_TOL of the best."""
    q = np.asarray(q, dtype=float)
    best = q.max(axis=-1, keepdims=True)
    opt = q >= best - OPT_TOL
    return opt / opt.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class RtsConfig:
    """Reachability-tree sampling: observation draws per node, optionally by depth.

    ``schedule`` holds ``(first_depth, draws)`` steps; the last step whose
    first depth is <= the node depth applies.
    """

    enabled: bool = False
    draws: int = 8
    schedule: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.enabled and (self.draws < 1 or any(n < 1 for _, n in self.schedule)):
            raise ValueError("observation draws per node must be >= 1")
        object.__setattr__(self, "schedule", tuple(sorted(tuple(x) for x in self.schedule)))

    @classmethod
    def tiger_default(cls) -> "RtsConfig":
        # eight draws near the root, six from depth five on
        return cls(True, 8, ((0, 8), (5, 6)))

    @classmethod
    def parse(cls, text: str | None) -> "RtsConfig":
        if text is None or text in ("off", "none", ""):
            return cls()
        if text == "default":
            return cls.tiger_default()
        if ":" not in text:
            return cls(True, int(text))
        steps = []
        for part in text.split(","):
            d, n = part.split(":")
            steps.append((int(d), int(n)))
        return cls(True, steps[0][1], tuple(steps))

    def draws_at(self, depth: int) -> int:
        n = self.draws
        for first, k in self.schedule:
            if depth >= first:
                n = k
        return n


@dataclass
class SolveContext:
    """Caches and counters shared by one planning or filtering computation."""

    seed: int = 0
    rts: RtsConfig = field(default_factory=RtsConfig)
    node_budget: int | None = None
    level0_cache: dict = field(default_factory=dict)
    nested_cache: dict = field(default_factory=dict)
    model_solves: int = 0
    ipf_calls: int = 0
    nodes: int = 0
    depletions: int = 0

    def stats(self) -> dict:
        return {
            "model_solves": self.model_solves,
            "ipf_calls": self.ipf_calls,
            "nodes": self.nodes,
            "depletions": self.depletions,
        }


# ---------------------------------------------------------------------------
# Level 0
# ---------------------------------------------------------------------------


def _level0_q(frame: Frame, B: np.ndarray, horizon: int) -> np.ndarray:
    """Exact Q-values for a batch of level-0 beliefs by full-tree expansion."""
    v = frame.view
    Q = B @ v.R_bar.T
    if horizon == 1:
        return Q
    for a in range(v.T_bar.shape[0]):
        pred = B @ v.T_bar[a]
        for o in range(v.O_bar.shape[2]):
            un = pred * v.O_bar[a][:, o]
            p = un.sum(axis=1)
            live = p > 0.0
            if not live.any():
                continue
            post = un[live] / p[live, None]
            child = _level0_q(frame, post, horizon - 1).max(axis=1)
            Q[live, a] += frame.gamma * p[live] * child
    return Q


def level0_policies(frame: Frame, B, horizon: int, ctx: SolveContext | None = None):
    """Action distributions and values for many level-0 beliefs at once (memoized)."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    key0 = (frame.domain, frame.agent, frame.gamma, int(horizon))
    cache = ctx.level0_cache.setdefault(key0, {}) if ctx is not None else {}
    q = quantize(B)
    keys = [row.tobytes() for row in q]
    missing = [n for n, k in enumerate(keys) if k not in cache]
    if missing:
        # solve each distinct missing belief once
        uniq = {}
        for n in missing:
            uniq.setdefault(keys[n], n)
        rows = np.fromiter(uniq.values(), dtype=np.int64)
        Q = _level0_q(frame, B[rows], int(horizon))
        dist = opt_distribution(Q)
        for r, k, d, qq in zip(rows, uniq.keys(), dist, Q):
            cache[k] = (d, float(qq.max()))
        if ctx is not None:
            ctx.model_solves += len(rows)
    dists = np.array([cache[k][0] for k in keys])
    values = np.array([cache[k][1] for k in keys])
    return dists, values


def level0_q_values(b, frame: Frame, horizon: int) -> np.ndarray:
    return _level0_q(frame, np.atleast_2d(np.asarray(b, dtype=float)), int(horizon))[0]


def solve_level0_policy(b0, frame: Frame, horizon: int | None = None):
    """Exact finite-horizon level-0 solution: (uniform over OPT, optimal value)."""
    horizon = frame.horizon if horizon is None else horizon
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    q = level0_q_values(b0, frame, horizon)
    return opt_distribution(q), float(q.max())


# ---------------------------------------------------------------------------
# Other agent's behaviour and observation likelihoods
# ---------------------------------------------------------------------------


def other_action_probs(ps: ParticleSet, horizon: int | None = None, ctx: SolveContext | None = None) -> np.ndarray:
    """Pr(a_-k | theta_-k) for every particle, shape (N, |A_-k|)."""
    ctx = ctx if ctx is not None else SolveContext()
    n_oth = ps.frame.view.T.shape[1]
    out = np.zeros((len(ps), n_oth))
    for f, ofr in enumerate(ps.other_frames):
        rows = np.flatnonzero(ps.frame_idx == f)
        if not len(rows):
            continue
        h = ofr.horizon if horizon is None else horizon
        if ps.level == 1:
            out[rows] = level0_policies(ofr, ps.beliefs[rows], h, ctx)[0]
        else:
            for n in rows:
                out[n] = nested_policy(ps.nested[n], h, ctx)
    return out


def nested_policy(inner: ParticleSet, horizon: int, ctx: SolveContext) -> np.ndarray:
    """Solve a nested (level >= 1) model, memoized on its particle multiset."""
    key = (inner.level, inner.frame, int(horizon), inner.fingerprint)
    hit = ctx.nested_cache.get(key)
    if hit is not None:
        return hit
    ctx.model_solves += 1
    stream = Stream(ctx.seed).child("nested", inner.level, int(horizon), inner.fingerprint)
    dist, _ = approx_policy(inner, inner.level, horizon, ctx.rts, stream, ctx=ctx, keep_tree=False)
    ctx.nested_cache[key] = dist
    return dist


def observation_likelihood(ps: ParticleSet, a_k, horizon: int | None = None, ctx: SolveContext | None = None,
                           pa: np.ndarray | None = None) -> np.ndarray:
    """Predicted distribution of the owner's next observation after ``a_k``."""
    view = ps.frame.view
    ak = ps.frame.domain.action_index(ps.agent, a_k)
    if pa is None:
        pa = other_action_probs(ps, horizon, ctx)
    w = ps.normalized_weights
    pred = np.einsum("n,na,nao->o", w, pa, view.obs_pred[ak][:, ps.states].transpose(1, 0, 2))
    return pred / pred.sum()


def expected_rewards(ps: ParticleSet, pa: np.ndarray) -> np.ndarray:
    """Mean over particles of sum_{a_-k} R(s, a_k, a_-k) Pr(a_-k), for every own action."""
    R = ps.frame.view.R_own  # (A_own, A_oth, S)
    w = ps.normalized_weights
    return np.einsum("n,na,kan->k", w, pa, R[:, :, ps.states])


def sample_observation_set(dist, n_draws: int, rng) -> list[tuple[int, float]]:
    """Draw observations with replacement; keep distinct ones, renormalizing their true probabilities."""
    dist = np.asarray(dist, dtype=float)
    if n_draws < 1:
        raise ValueError("observation draws must be >= 1")
    gen = as_generator(rng)
    cdf = np.cumsum(dist)
    cdf /= cdf[-1]
    draws = np.minimum(np.searchsorted(cdf, gen.random(n_draws), side="right"), len(dist) - 1)
    picked = np.unique(draws)
    w = dist[picked] / dist[picked].sum()
    return [(int(o), float(x)) for o, x in zip(picked, w)]


# ---------------------------------------------------------------------------
# Policy trees
# ---------------------------------------------------------------------------


@dataclass
class PolicyNode:
    dist: np.ndarray
    value: float
    q: np.ndarray
    horizon: int
    n_obs: int
    children: dict = field(default_factory=dict)
    branch_weights: dict = field(default_factory=dict)
    belief: object = None
    frame: Frame | None = None

    def slot(self, a: int, o: int) -> int:
        return self.n_obs * a + o

    def child(self, a: int, o: int) -> "PolicyNode | None":
        return self.children.get(self.slot(a, o))

    def best_actions(self) -> np.ndarray:
        return np.flatnonzero(self.dist > 0)

    def count(self) -> int:
        return 1 + sum(c.count() for c in self.children.values())

    def to_dict(self) -> dict:
        fr = self.frame
        acts = fr.actions if fr else [str(a) for a in range(len(self.dist))]
        obs = fr.observations if fr else [str(o) for o in range(self.n_obs)]
        kids = []
        for slot in sorted(self.children):
            a, o = divmod(slot, self.n_obs)
            kids.append({
                "slot": slot,
                "action": acts[a],
                "observation": obs[o],
                "weight": self.branch_weights[slot],
                "node": self.children[slot].to_dict(),
            })
        return {
            "horizon": self.horizon,
            "value": self.value,
            "q": {acts[a]: float(x) for a, x in enumerate(self.q)},
            "policy": {acts[a]: float(p) for a, p in enumerate(self.dist) if p > 0},
            "children": kids,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def render(self, indent: str = "") -> str:
        fr = self.frame
        acts = fr.actions if fr else [str(a) for a in range(len(self.dist))]
        obs = fr.observations if fr else [str(o) for o in range(self.n_obs)]
        pol = ", ".join(f"{acts[a]}: {self.dist[a]:.4g}" for a in self.best_actions())
        lines = [f"{indent}{{{pol}}} value={self.value:.6g}"]
        for slot in sorted(self.children):
            a, o = divmod(slot, self.n_obs)
            lines.append(f"{indent}  {acts[a]} / {obs[o]} (w={self.branch_weights[slot]:.4g})")
            lines.append(self.children[slot].render(indent + "    "))
        return "\n".join(lines)


def _same_tree(x: PolicyNode, y: PolicyNode) -> bool:
    """Node-for-node equality of two policy trees (values, policies, branch weights)."""
    if x.value != y.value or not np.array_equal(x.dist, y.dist) or not np.array_equal(x.q, y.q):
        return False
    if x.branch_weights != y.branch_weights or x.children.keys() != y.children.keys():
        return False
    return all(_same_tree(x.children[k], y.children[k]) for k in x.children)


same_tree = _same_tree


def approx_policy(
    model,
    level: int,
    horizon: int,
    rts: RtsConfig | None = None,
    rng=None,
    *,
    ctx: SolveContext | None = None,
    keep_tree: bool = True,
    keep_beliefs: bool = False,
):
    """Approximate finite-horizon policy for a (possibly nested) sampled belief.

    ``model`` is a ParticleSet (levels >= 1) or a ``(belief, frame)`` pair
    (level 0). Returns ``(action distribution, PolicyNode)``.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if isinstance(model, tuple):
        belief, frame = model
    else:
        belief, frame = model, model.frame
    rts = rts or RtsConfig()
    if ctx is None:
        ctx = SolveContext(seed=as_stream(rng).seed, rts=rts)

    if level == 0:
        b = np.asarray(belief.marginal() if isinstance(belief, ParticleSet) else belief, dtype=float)
        q = level0_q_values(b, frame, horizon)
        node = PolicyNode(opt_distribution(q), float(q.max()), q, horizon, frame.n_obs, belief=b, frame=frame)
        return node.dist, node

    if not isinstance(belief, ParticleSet):
        raise LevelMismatchError("levels >= 1 need a particle set")
    if len(belief) == 0:
        raise DegenerateInputError("empty particle set")
    if belief.level != level:
        raise LevelMismatchError(f"particle set is level {belief.level}, asked to plan at level {level}")
    node = _backup(belief, horizon, 0, as_stream(rng), rts, ctx, keep_tree, keep_beliefs)
    return node.dist, node


def _backup(ps: ParticleSet, h: int, depth: int, stream: Stream, rts: RtsConfig, ctx: SolveContext,
            keep_tree: bool, keep_beliefs: bool) -> PolicyNode:
    ctx.nodes += 1
    if ctx.node_budget is not None and ctx.nodes > ctx.node_budget:
        raise BudgetExceededError(f"policy tree exceeds the node budget of {ctx.node_budget}")
    frame = ps.frame
    pa = other_action_probs(ps, horizon=h, ctx=ctx)
    q = expected_rewards(ps, pa)
    node = PolicyNode(None, 0.0, q, h, frame.n_obs, belief=ps if keep_beliefs or depth == 0 else None, frame=frame)
    if h > 1:
        for a in range(frame.n_actions):
            p_obs = observation_likelihood(ps, a, pa=pa)
            if rts.enabled:
                chosen = sample_observation_set(p_obs, rts.draws_at(depth), stream.child("rts", a).generator())
                chosen = [o for o, _ in chosen]
            else:
                chosen = [int(o) for o in np.flatnonzero(p_obs > 0.0)]
            kids = {}
            for o in chosen:
                try:
                    nxt = filters.ipf_step(ps, a, o, stream.child(a, o).generator(), horizon=h, ctx=ctx)
                except ParticleDepletionError:
                    ctx.depletions += 1
                    continue
                kids[o] = _backup(nxt, h - 1, depth + 1, stream.child(a, o, "node"), rts, ctx, keep_tree, keep_beliefs)
            if not kids:
                continue
            mass = np.array([p_obs[o] for o in kids])
            weights = mass / mass.sum()
            q[a] += frame.gamma * float(sum(w * kids[o].value for w, o in zip(weights, kids)))
            if keep_tree:
                for w, o in zip(weights, kids):
                    node.children[node.slot(a, o)] = kids[o]
                    node.branch_weights[node.slot(a, o)] = float(w)
    node.q = q
    node.dist = opt_distribution(q)
    node.value = float(q.max())
    return node


# ---------------------------------------------------------------------------
# Grid planner (level 1)
# ---------------------------------------------------------------------------


def grid_plan_level1(gb, frame: Frame | None = None, horizon: int = 1, *, node_budget: int = 20000,
                     method: str = "scatter", ctx: SolveContext | None = None):
    """Value iteration on the grid belief's reachability tree: (distribution, value)."""
    frame = frame or gb.frame
    A, O = frame.n_actions, frame.n_obs
    nodes = sum((A * O) ** d for d in range(horizon))
    if nodes > node_budget:
        raise BudgetExceededError(f"grid planning tree of {nodes} nodes exceeds the budget of {node_budget}")
    ctx = ctx or filters._grid_ctx()
    node = _grid_backup(gb, frame, horizon, method, ctx)
    return node.dist, node


def _grid_backup(gb, frame: Frame, h: int, method: str, ctx) -> PolicyNode:
    view = frame.view
    S, F, V = gb.mass.shape
    q = np.zeros(frame.n_actions)
    for f, ofr in enumerate(gb.other_frames):
        pol = level0_policies(ofr, gb.points, h, ctx)[0]  # (V, A_j)
        # sum over vertices of mass * Pr(a_j | vertex): (S, A_j)
        m = gb.mass[:, f, :] @ pol
        q += np.einsum("sb,abs->a", m, view.R_own)
    node = PolicyNode(None, 0.0, q, h, frame.n_obs, belief=gb, frame=frame)
    if h > 1:
        for a in range(frame.n_actions):
            total = 0.0
            for o in range(frame.n_obs):
                un = filters.grid_propagate(gb, a, o, horizon=h, method=method, ctx=ctx)
                p = un.sum()
                if p <= 0.0:
                    continue
                child_gb = filters.GridBelief(gb.frame, gb.other_frames, gb.G, un / p, gb.other_horizon, gb.lattice)
                child = _grid_backup(child_gb, frame, h - 1, method, ctx)
                node.children[node.slot(a, o)] = child
                node.branch_weights[node.slot(a, o)] = float(p)
                total += p * child.value
            q[a] += frame.gamma * total
    node.q = q
    node.dist = opt_distribution(q)
    node.value = float(q.max())
    return node
