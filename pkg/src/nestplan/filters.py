"""Belief updates: exact level 0, bootstrap, interactive particle filter, grid baseline."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import planner
from .errors import DegenerateInputError, InconsistentObservationError, LevelMismatchError, ParticleDepletionError
from .model import Frame, NestedPrior, ParticleSet, PointMasses, normalize_weights, resample_unbiased
from .rng import as_generator

VARIANTS = ("enum", "sample")


# ---------------------------------------------------------------------------
# Level 0
# ---------------------------------------------------------------------------


def level0_update(b, a_k, o_k, frame: Frame) -> np.ndarray:
    """Exact update of a level-0 belief, other agent's action treated as uniform noise."""
    b = np.asarray(b, dtype=float)
    a = frame.domain.action_index(frame.agent, a_k)
    o = frame.domain.obs_index(frame.agent, o_k)
    v = frame.view
    post = (b @ v.T_bar[a]) * v.O_bar[a][:, o]
    total = post.sum()
    if total <= 0.0:
        raise InconsistentObservationError(
            f"observation {frame.observations[o]!r} has zero probability after {frame.actions[a]!r}"
        )
    return post / total


def level0_update_batch(B: np.ndarray, a: np.ndarray, o: int, frame: Frame):
    """Row-wise level-0 update of beliefs ``B`` under per-row actions ``a``.

    Returns ``(posteriors, mass)``; rows with zero mass keep their prior.
    """
    v = frame.view
    pred = np.einsum("ns,nst->nt", B, v.T_bar[a])
    un = pred * v.O_bar[a, :, o]
    mass = un.sum(axis=1)
    ok = mass > 0.0
    post = np.where(ok[:, None], un / np.where(ok, mass, 1.0)[:, None], B)
    return post, mass


def _sample_rows(P: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """One categorical draw per row of the row-stochastic matrix ``P``."""
    cdf = np.cumsum(P, axis=1)
    cdf /= cdf[:, -1:]
    u = gen.random(len(P))
    return np.minimum((cdf <= u[:, None]).sum(axis=1), P.shape[1] - 1)


def bootstrap_filter(ps: ParticleSet, a, o, frame: Frame | None = None, rng=None, scheme="multinomial") -> ParticleSet:
    """Propagate, weight and resample a level-0 set of physical states."""
    if len(ps) == 0:
        raise DegenerateInputError("empty particle set")
    frame = frame or ps.frame
    gen = as_generator(rng)
    ai = frame.domain.action_index(frame.agent, a)
    oi = frame.domain.obs_index(frame.agent, o)
    v = frame.view
    nxt = _sample_rows(v.T_bar[ai][ps.states], gen)
    w = v.O_bar[ai][nxt, oi] * ps.normalized_weights
    if not np.any(w > 0):
        raise ParticleDepletionError("no particle is consistent with the observation")
    weighted = ParticleSet(level=0, frame=frame, states=nxt, weights=w, nominal=ps.nominal)
    return resample_unbiased(normalize_weights(weighted), ps.nominal, gen, scheme)


# ---------------------------------------------------------------------------
# Interactive particle filter
# ---------------------------------------------------------------------------


def ipf_propagate(
    ps: ParticleSet,
    a_k,
    o_k,
    rng=None,
    *,
    variant: str = "enum",
    horizon: int | None = None,
    ctx=None,
    other_policy=None,
) -> ParticleSet:
    """Propagation and weighting; returns the unnormalized, pre-resampling set.

    ``horizon`` is the horizon used to solve the other agent's models (default:
    each model's own frame horizon). ``other_policy="uniform"`` replaces the
    solved policy by a uniform distribution over the other's actions.
    """
    if len(ps) == 0:
        raise DegenerateInputError("empty particle set")
    if ps.level < 1:
        raise LevelMismatchError("the interactive filter needs a level >= 1 particle set")
    if variant not in VARIANTS:
        raise ValueError(f"unknown propagation variant {variant!r}")
    ctx = ctx if ctx is not None else planner.SolveContext()
    ctx.ipf_calls += 1
    gen = as_generator(rng)
    frame = ps.frame
    dom = frame.domain
    ak = dom.action_index(frame.agent, a_k)
    ok = dom.obs_index(frame.agent, o_k)
    view = frame.view
    N = len(ps)

    if other_policy == "uniform":
        pa = np.full((N, view.T.shape[1]), 1.0 / view.T.shape[1])
    elif other_policy is None:
        pa = planner.other_action_probs(ps, horizon=horizon, ctx=ctx)
    else:
        pa = np.broadcast_to(np.asarray(other_policy, dtype=float), (N, view.T.shape[1]))
    a_oth = _sample_rows(pa, gen)
    nxt = _sample_rows(view.T[ak, a_oth, ps.states], gen)
    own_lik = view.O_own[ak, a_oth, nxt, ok]
    oth_lik = view.O_oth[ak, a_oth, nxt]  # (N, O_oth)
    # resampled sets carry implicit unit weights
    base_w = np.ones(N) if ps.weights is None else ps.weights
    n_oth = oth_lik.shape[1]

    if variant == "sample":
        o_oth = _sample_rows(oth_lik, gen)[:, None]
    else:
        o_oth = np.broadcast_to(np.arange(n_oth), (N, n_oth))
    k = o_oth.shape[1]
    lik = np.take_along_axis(oth_lik, o_oth, axis=1) if variant == "enum" else np.ones((N, 1))
    weights = (lik * (own_lik * base_w)[:, None])  # (N, k)

    if ps.level == 1:
        beliefs = np.empty((N, k, dom.n_states))
        for f, ofr in enumerate(ps.other_frames):
            rows = np.flatnonzero(ps.frame_idx == f)
            if not len(rows):
                continue
            for c in range(k):
                col = o_oth[rows, c]
                for o_val in np.unique(col):
                    sel = rows[col == o_val]
                    post, mass = level0_update_batch(ps.beliefs[sel], a_oth[sel], int(o_val), ofr)
                    beliefs[sel, c] = post
                    weights[sel[mass <= 0.0], c] = 0.0
        out = ParticleSet(
            level=1,
            frame=frame,
            states=np.repeat(nxt, k),
            other_frames=ps.other_frames,
            frame_idx=np.repeat(ps.frame_idx, k),
            beliefs=beliefs.reshape(N * k, -1),
            weights=weights.reshape(-1),
            nominal=ps.nominal,
        )
        return out

    seeds = gen.integers(0, 2**63 - 1, size=(N, k))
    nested = []
    for n in range(N):
        for c in range(k):
            inner = ps.nested[n]
            if weights[n, c] > 0.0:
                try:
                    inner = ipf_step(
                        inner,
                        int(a_oth[n]),
                        int(o_oth[n, c]),
                        np.random.default_rng(int(seeds[n, c])),
                        variant=variant,
                        horizon=horizon,
                        ctx=ctx,
                    )
                except ParticleDepletionError:
                    weights[n, c] = 0.0
                    ctx.depletions += 1
            nested.append(inner)
    return ParticleSet(
        level=ps.level,
        frame=frame,
        states=np.repeat(nxt, k),
        other_frames=ps.other_frames,
        frame_idx=np.repeat(ps.frame_idx, k),
        nested=tuple(nested),
        weights=weights.reshape(-1),
        nominal=ps.nominal,
        origin=None if ps.origin is None else np.repeat(ps.origin, k),
    )


def ipf_step(ps: ParticleSet, a_k, o_k, rng=None, *, variant="enum", horizon=None, ctx=None,
             other_policy=None, scheme="multinomial") -> ParticleSet:
    """One interactive particle filter update; always returns ``ps.nominal`` particles."""
    gen = as_generator(rng)
    weighted = ipf_propagate(
        ps, a_k, o_k, gen, variant=variant, horizon=horizon, ctx=ctx, other_policy=other_policy
    )
    if not np.any(weighted.weights > 0.0):
        raise ParticleDepletionError(
            f"observation {o_k!r} after action {a_k!r} is inconsistent with every particle"
        )
    return resample_unbiased(normalize_weights(weighted), ps.nominal, gen, scheme)


def ipf_step_sampled_obs(ps: ParticleSet, a_k, o_k, rng=None, **kw) -> ParticleSet:
    """I-PF variant that samples the other agent's observation instead of enumerating it."""
    return ipf_step(ps, a_k, o_k, rng, variant="sample", **kw)


# ---------------------------------------------------------------------------
# Grid baseline (level 1)
# ---------------------------------------------------------------------------


def _compositions(total: int, parts: int) -> np.ndarray:
    if parts == 1:
        return np.array([[total]])
    rows = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            rows.append([first, *rest])
    return np.array(rows, dtype=np.int64)


@dataclass(frozen=True)
class Lattice:
    """Regular grid on the probability simplex over ``n_states`` states."""

    n_states: int
    G: int

    @cached_property
    def counts(self) -> np.ndarray:
        if self.n_states == 2:
            k = np.arange(self.G + 1)
            return np.stack([k, self.G - k], axis=1)
        return _compositions(self.G, self.n_states)

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.counts / self.G
        pts.setflags(write=False)
        return pts

    @property
    def size(self) -> int:
        return len(self.counts)

    @cached_property
    def _lookup(self) -> np.ndarray:
        shape = (self.G + 1,) * (self.n_states - 1)
        table = np.full(shape, -1, dtype=np.int64)
        table[tuple(self.counts[:, :-1].T)] = np.arange(self.size)
        return table

    def project(self, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map beliefs to lattice vertices; returns (indices, weights), each (M, 2).

        Two-state beliefs are split linearly between neighbouring vertices;
        larger simplices use the nearest vertex (largest-remainder rounding).
        """
        B = np.atleast_2d(np.asarray(B, dtype=float))
        M = len(B)
        if self.n_states == 2:
            x = np.clip(B[:, 0], 0.0, 1.0) * self.G
            lo = np.minimum(np.floor(x).astype(np.int64), self.G - 1)
            frac = x - lo
            # vertex index k holds p(first state) = k / G
            return np.stack([lo, lo + 1], axis=1), np.stack([1.0 - frac, frac], axis=1)
        scaled = np.clip(B, 0.0, None) * self.G
        base = np.floor(scaled).astype(np.int64)
        short = self.G - base.sum(axis=1)
        order = np.argsort(-(scaled - base), axis=1, kind="stable")
        bump = np.zeros_like(base)
        ranks = np.argsort(order, axis=1)
        bump[ranks < short[:, None]] = 1
        c = base + bump
        idx = self._lookup[tuple(c[:, :-1].T)]
        return np.stack([idx, idx], axis=1), np.tile([1.0, 0.0], (M, 1))

    def histogram(self, B: np.ndarray, weights: np.ndarray) -> np.ndarray:
        idx, w = self.project(B)
        return np.bincount(idx.ravel(), weights=(w * weights[:, None]).ravel(), minlength=self.size)

    def kernel(self, B: np.ndarray) -> np.ndarray:
        """Dense (M, V) projection matrix; hat functions for two states."""
        if self.n_states == 2:
            grid = np.arange(self.size) / self.G
            return np.maximum(0.0, 1.0 - np.abs(B[:, :1] * self.G - grid[None, :] * self.G))
        idx, w = self.project(B)
        K = np.zeros((len(B), self.size))
        np.add.at(K, (np.arange(len(B))[:, None], idx), w)
        return K


@dataclass(frozen=True, eq=False)
class GridBelief:
    """Level-1 belief as mass over (state, other's frame, lattice vertex)."""

    frame: Frame
    other_frames: tuple[Frame, ...]
    G: int
    mass: np.ndarray
    other_horizon: int | None = None
    lattice: Lattice = field(default=None)

    def __post_init__(self):
        if self.lattice is None:
            object.__setattr__(self, "lattice", Lattice(self.frame.domain.n_states, self.G))
        m = np.asarray(self.mass, dtype=float)
        expect = (self.frame.domain.n_states, len(self.other_frames), self.lattice.size)
        if m.shape != expect:
            raise ValueError(f"grid mass shape {m.shape} != {expect}")
        object.__setattr__(self, "mass", m)

    @classmethod
    def from_prior(cls, prior: NestedPrior, G: int, refine: int = 8, other_horizon=None) -> "GridBelief":
        if prior.level != 1:
            raise LevelMismatchError("grid beliefs discretize level-1 priors only")
        S = prior.frame.domain.n_states
        lat = Lattice(S, G)
        fine = Lattice(S, G * refine)
        if S == 2:
            t = (np.arange(G * refine) + 0.5) / (G * refine)
            fine_pts = np.stack([t, 1.0 - t], axis=1)
        else:
            fine_pts = fine.points
        mass = np.zeros((S, len(prior.other_frames), lat.size))
        for (s, f), dens in prior.densities.items():
            target = prior.state_marginal[s] * prior.frame_marginal[f]
            if target == 0.0:
                continue
            if isinstance(dens, PointMasses):
                h = lat.histogram(np.asarray(dens.points, dtype=float), np.asarray(dens.weights, dtype=float))
            else:
                h = lat.histogram(fine_pts, dens.density(fine_pts))
            if h.sum() <= 0.0:
                raise ValueError(f"prior density for state {s}, frame {f} has no mass on the grid")
            mass[s, f] = target * h / h.sum()
        return cls(prior.frame, prior.other_frames, G, mass, other_horizon, lat)

    @property
    def points(self) -> np.ndarray:
        return self.lattice.points

    def marginal(self) -> np.ndarray:
        return self.mass.sum(axis=(1, 2))

    def normalized(self) -> "GridBelief":
        total = self.mass.sum()
        if total <= 0.0:
            raise InconsistentObservationError("grid posterior has zero mass")
        return GridBelief(self.frame, self.other_frames, self.G, self.mass / total, self.other_horizon, self.lattice)

    def coarsen(self, G_coarse: int) -> np.ndarray:
        """Mass re-projected onto a coarser lattice whose resolution divides G."""
        if self.G % G_coarse:
            raise ValueError("coarse resolution must divide the fine one")
        lat = Lattice(self.frame.domain.n_states, G_coarse)
        out = np.zeros(self.mass.shape[:2] + (lat.size,))
        for s in range(out.shape[0]):
            for f in range(out.shape[1]):
                out[s, f] = lat.histogram(self.points, self.mass[s, f])
        return out


def _other_policy_grid(gb: GridBelief, f: int, horizon: int, ctx) -> np.ndarray:
    fr = gb.other_frames[f]
    return planner.level0_policies(fr, gb.points, horizon, ctx)[0]


_GRID_CTX = None


def _grid_ctx():
    global _GRID_CTX
    if _GRID_CTX is None:
        _GRID_CTX = planner.SolveContext()
    return _GRID_CTX


def grid_propagate(gb: GridBelief, a_i, o_i, *, horizon=None, method="integrate", ctx=None) -> np.ndarray:
    """Unnormalized posterior mass after (a_i, o_i); its total is Pr(o_i | a_i, belief)."""
    if method not in ("integrate", "scatter"):
        raise ValueError(f"unknown grid update method {method!r}")
    ctx = ctx or _grid_ctx()
    frame = gb.frame
    dom = frame.domain
    ai = dom.action_index(frame.agent, a_i)
    oi = dom.obs_index(frame.agent, o_i)
    view = frame.view
    S, F, V = gb.mass.shape
    lat = gb.lattice
    out = np.zeros_like(gb.mass)
    for f, ofr in enumerate(gb.other_frames):
        if not gb.mass[:, f].any():
            continue
        h = horizon or gb.other_horizon or ofr.horizon
        pol = _other_policy_grid(gb, f, h, ctx)  # (V, A_j)
        for aj in range(pol.shape[1]):
            pa = pol[:, aj]
            if not pa.any():
                continue
            # mass over next states for every source vertex: (V, S')
            src = (gb.mass[:, f, :] * pa[None, :]).T
            nxt = src @ view.T[ai, aj]
            lik_i = view.O_own[ai, aj, :, oi]  # (S',)
            for oj in range(view.O_oth.shape[3]):
                w = nxt * (view.O_oth[ai, aj, :, oj] * lik_i)[None, :]  # (V, S')
                if not w.any():
                    continue
                post, m = level0_update_batch(gb.points, np.full(V, aj), oj, ofr)
                w = np.where((m > 0.0)[:, None], w, 0.0)
                if method == "integrate":
                    # numerical integration against the projected delta at every target vertex
                    out[:, f, :] += (lat.kernel(post).T @ w).T
                else:
                    idx, pw = lat.project(post)
                    for c in range(idx.shape[1]):
                        for sp in range(S):
                            out[sp, f] += np.bincount(idx[:, c], weights=pw[:, c] * w[:, sp], minlength=V)
    return out


def grid_update_level1(gb: GridBelief, a_i, o_i, *, horizon=None, method="integrate", ctx=None) -> GridBelief:
    """Exact-on-the-grid level-1 belief update (prediction, projection, correction)."""
    out = grid_propagate(gb, a_i, o_i, horizon=horizon, method=method, ctx=ctx)
    total = out.sum()
    if total <= 0.0:
        raise InconsistentObservationError(f"observation {o_i!r} has zero probability on the grid")
    return GridBelief(gb.frame, gb.other_frames, gb.G, out / total, gb.other_horizon, gb.lattice)


def bin_particles(ps: ParticleSet, gb: GridBelief) -> np.ndarray:
    """Histogram a level-1 particle set on the grid's (state, frame, vertex) cells."""
    if ps.level != 1:
        raise LevelMismatchError("only level-1 particle sets can be binned on a level-1 grid")
    if len(ps.other_frames) != len(gb.other_frames):
        raise ValueError("particle and grid frame sets differ")
    S, F, V = gb.mass.shape
    out = np.zeros((S, F, V))
    w = ps.normalized_weights
    for s in range(S):
        for f in range(F):
            sel = (ps.states == s) & (ps.frame_idx == f)
            if sel.any():
                out[s, f] = gb.lattice.histogram(ps.beliefs[sel], w[sel])
    return out
