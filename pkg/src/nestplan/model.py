"""Domains, frames, nested priors and interactive particle sets.

Tables are stored as dense numpy arrays indexed by the joint action in the
fixed order ``(a_i, a_j)``:

* ``transition[a_i, a_j, s, s']``
* ``obsfn[k][a_i, a_j, s', o_k]``
* ``reward[k][a_i, a_j, s]``

Agent-relative views (own action first) are available via :meth:`Domain.view`.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, NamedTuple, Sequence, Union

import numpy as np

from .errors import (
    DegenerateInputError,
    LevelMismatchError,
    ParticleDepletionError,
    PriorError,
)
from .rng import as_generator

AGENTS = ("i", "j")
TABLE_TOL = 1e-6
VECTOR_TOL = 1e-9
BELIEF_QUANTUM = 1e-9


def other(agent: str) -> str:
    if agent == "i":
        return "j"
    if agent == "j":
        return "i"
    raise ValueError(f"unknown agent role {agent!r}")


def quantize(belief) -> np.ndarray:
    """Integer fingerprint of a probability vector at a 1e-9 resolution."""
    return np.rint(np.asarray(belief, dtype=float) / BELIEF_QUANTUM).astype(np.int64)


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------


class AgentView(NamedTuple):
    """Tables re-indexed so the viewing agent's action comes first."""

    agent: str
    T: np.ndarray  # (A_own, A_oth, S, S)
    O_own: np.ndarray  # (A_own, A_oth, S, O_own)
    O_oth: np.ndarray  # (A_own, A_oth, S, O_oth)
    R_own: np.ndarray  # (A_own, A_oth, S)
    # other agent's action treated as uniform noise
    T_bar: np.ndarray  # (A_own, S, S)
    O_bar: np.ndarray  # (A_own, S, O_own)
    R_bar: np.ndarray  # (A_own, S)
    # sum_{s'} T(s'|s,a) O_own(o|s',a)
    obs_pred: np.ndarray  # (A_own, A_oth, S, O_own)


@dataclass(frozen=True, eq=False)
class Domain:
    name: str
    states: tuple[str, ...]
    actions: Mapping[str, tuple[str, ...]]
    observations: Mapping[str, tuple[str, ...]]
    transition: np.ndarray
    obsfn: Mapping[str, np.ndarray]
    reward: Mapping[str, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", {k: tuple(self.actions[k]) for k in AGENTS})
        object.__setattr__(
            self, "observations", {k: tuple(self.observations[k]) for k in AGENTS}
        )
        arrays = {"transition": np.array(self.transition, dtype=float)}
        for name in ("obsfn", "reward"):
            arrays[name] = {k: np.array(getattr(self, name)[k], dtype=float) for k in AGENTS}
        arrays["transition"].setflags(write=False)
        for k in AGENTS:
            arrays["obsfn"][k].setflags(write=False)
            arrays["reward"][k].setflags(write=False)
        for name, value in arrays.items():
            object.__setattr__(self, name, value)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def n_actions(self, agent: str) -> int:
        return len(self.actions[agent])

    def n_obs(self, agent: str) -> int:
        return len(self.observations[agent])

    def state_index(self, label: str) -> int:
        return self.states.index(label)

    def action_index(self, agent: str, label) -> int:
        if isinstance(label, (int, np.integer)):
            return int(label)
        return self.actions[agent].index(label)

    def obs_index(self, agent: str, label) -> int:
        if isinstance(label, (int, np.integer)):
            return int(label)
        return self.observations[agent].index(label)

    def _key(self):
        return (
            self.name,
            self.states,
            tuple(self.actions[k] for k in AGENTS),
            tuple(self.observations[k] for k in AGENTS),
        )

    def __hash__(self):
        return hash(self._key())

    def __eq__(self, other_):
        if self is other_:
            return True
        if not isinstance(other_, Domain) or self._key() != other_._key():
            return False
        if not np.array_equal(self.transition, other_.transition):
            return False
        return all(
            np.array_equal(self.obsfn[k], other_.obsfn[k])
            and np.array_equal(self.reward[k], other_.reward[k])
            for k in AGENTS
        )

    def view(self, agent: str) -> AgentView:
        return self._views[agent]

    @cached_property
    def _views(self) -> dict[str, AgentView]:
        views = {}
        for k in AGENTS:
            swap = (lambda x: x) if k == "i" else (lambda x: np.swapaxes(x, 0, 1))
            T = np.ascontiguousarray(swap(self.transition))
            O_own = np.ascontiguousarray(swap(self.obsfn[k]))
            O_oth = np.ascontiguousarray(swap(self.obsfn[other(k)]))
            R_own = np.ascontiguousarray(swap(self.reward[k]))
            obs_pred = np.einsum("abst,abto->abso", T, O_own)
            v = AgentView(
                agent=k,
                T=T,
                O_own=O_own,
                O_oth=O_oth,
                R_own=R_own,
                T_bar=T.mean(axis=1),
                O_bar=O_own.mean(axis=1),
                R_bar=R_own.mean(axis=1),
                obs_pred=obs_pred,
            )
            for arr in v[1:]:
                arr.setflags(write=False)
            views[k] = v
        return views

    @cached_property
    def absorbing(self) -> np.ndarray:
        """Boolean mask of states that self-loop with zero reward under every joint action."""
        S = self.n_states
        loops = np.all(self.transition[:, :, np.arange(S), np.arange(S)] == 1.0, axis=(0, 1))
        quiet = np.ones(S, dtype=bool)
        for k in AGENTS:
            quiet &= np.all(self.reward[k] == 0.0, axis=(0, 1))
        return loops & quiet

    def reward_range(self, agent: str = "i") -> tuple[float, float]:
        r = self.reward[agent]
        return float(r.min()), float(r.max())


class Violation(NamedTuple):
    table: str
    key: tuple
    constraint: str

    def __str__(self):
        return f"{self.table} {' '.join(map(str, self.key))}: {self.constraint}"


def validate_domain(d: Domain) -> list[Violation]:
    """Check every table row of ``d``; an empty list means the domain is valid."""
    report: list[Violation] = []
    Ai, Aj, S = d.n_actions("i"), d.n_actions("j"), d.n_states
    expected = {
        "transition": (d.transition, (Ai, Aj, S, S)),
        "observation i": (d.obsfn["i"], (Ai, Aj, S, d.n_obs("i"))),
        "observation j": (d.obsfn["j"], (Ai, Aj, S, d.n_obs("j"))),
        "reward i": (d.reward["i"], (Ai, Aj, S)),
        "reward j": (d.reward["j"], (Ai, Aj, S)),
    }
    for table, (arr, shape) in expected.items():
        if arr.shape != shape:
            report.append(Violation(table, (), f"shape {arr.shape} != {shape}"))
            continue
        for ai in range(Ai):
            for aj in range(Aj):
                for s in range(S):
                    key = (d.actions["i"][ai], d.actions["j"][aj], d.states[s])
                    row = arr[ai, aj, s]
                    if np.any(np.isnan(row)):
                        report.append(Violation(table, key, "missing row"))
                        continue
                    if table.startswith("reward"):
                        if not np.isfinite(row):
                            report.append(Violation(table, key, "non-finite reward"))
                        continue
                    if np.any(row < 0.0) or np.any(row > 1.0):
                        report.append(Violation(table, key, "entry outside [0, 1]"))
                    total = float(row.sum())
                    if abs(total - 1.0) > TABLE_TOL:
                        report.append(Violation(table, key, f"row sums to {total:.9g}, not 1"))
    return report


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """Everything in an intentional model except the belief."""

    agent: str
    domain: Domain
    gamma: float = 0.9
    horizon: int = 1

    def __post_init__(self):
        if self.agent not in AGENTS:
            raise ValueError(f"unknown agent role {self.agent!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.gamma}")
        if int(self.horizon) < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")

    @property
    def view(self) -> AgentView:
        return self.domain.view(self.agent)

    @property
    def n_actions(self) -> int:
        return self.domain.n_actions(self.agent)

    @property
    def n_obs(self) -> int:
        return self.domain.n_obs(self.agent)

    @property
    def actions(self) -> tuple[str, ...]:
        return self.domain.actions[self.agent]

    @property
    def observations(self) -> tuple[str, ...]:
        return self.domain.observations[self.agent]

    def replace(self, **changes) -> "Frame":
        fields = dict(agent=self.agent, domain=self.domain, gamma=self.gamma, horizon=self.horizon)
        fields.update(changes)
        return Frame(**fields)

    def counterpart(self) -> "Frame":
        """The same frame seen from the other agent's seat."""
        return self.replace(agent=other(self.agent))


# ---------------------------------------------------------------------------
# Densities over the level-0 simplex
# ---------------------------------------------------------------------------


def _check_simplex_rows(x, n_states, what):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != n_states:
        raise PriorError(f"{what}: expected vectors of length {n_states}")
    if np.any(x < -VECTOR_TOL) or np.any(np.abs(x.sum(axis=1) - 1.0) > VECTOR_TOL):
        raise PriorError(f"{what}: vectors must be probability vectors")
    return x


@dataclass(frozen=True)
class Uniform:
    """Flat density over the simplex, optionally restricted to a face."""

    support: tuple[int, ...] | None = None

    def validate(self, n_states):
        if self.support is not None:
            if not self.support or any(not 0 <= s < n_states for s in self.support):
                raise PriorError("uniform density support must name valid states")

    def sample(self, n, n_states, rng) -> np.ndarray:
        support = range(n_states) if self.support is None else self.support
        support = np.asarray(support, dtype=int)
        out = np.zeros((n, n_states))
        out[:, support] = rng.dirichlet(np.ones(len(support)), size=n)
        return out

    def density(self, points: np.ndarray) -> np.ndarray:
        w = np.ones(len(points))
        if self.support is not None:
            outside = np.setdiff1d(np.arange(points.shape[1]), self.support)
            w[np.any(points[:, outside] > VECTOR_TOL, axis=1)] = 0.0
        return w


@dataclass(frozen=True)
class PiecewiseConstant:
    """Step density over the probability assigned to the first state.

    The remaining mass is spread uniformly over the other states' face, which
    makes this exact on two-state domains.
    """

    edges: tuple[float, ...]
    densities: tuple[float, ...]

    def validate(self, n_states):
        e = np.asarray(self.edges, dtype=float)
        d = np.asarray(self.densities, dtype=float)
        if len(e) != len(d) + 1 or len(d) == 0:
            raise PriorError("piecewise density needs len(edges) == len(densities) + 1")
        if abs(e[0]) > VECTOR_TOL or abs(e[-1] - 1.0) > VECTOR_TOL or np.any(np.diff(e) <= 0):
            raise PriorError("piecewise bin edges must increase from 0 to 1")
        if np.any(d < 0):
            raise PriorError("piecewise densities must be nonnegative")
        if abs(self.bin_masses(raw=True).sum() - 1.0) > TABLE_TOL:
            raise PriorError("piecewise density must integrate to 1")

    def bin_masses(self, raw=False) -> np.ndarray:
        m = np.diff(np.asarray(self.edges, dtype=float)) * np.asarray(self.densities, dtype=float)
        return m if raw else m / m.sum()

    def sample(self, n, n_states, rng) -> np.ndarray:
        e = np.asarray(self.edges, dtype=float)
        bins = rng.choice(len(self.densities), size=n, p=self.bin_masses())
        p = e[bins] + rng.random(n) * (e[bins + 1] - e[bins])
        out = np.zeros((n, n_states))
        out[:, 0] = p
        if n_states == 2:
            out[:, 1] = 1.0 - p
        else:
            out[:, 1:] = (1.0 - p)[:, None] * rng.dirichlet(np.ones(n_states - 1), size=n)
        return out

    def density(self, points: np.ndarray) -> np.ndarray:
        e = np.asarray(self.edges, dtype=float)
        k = np.clip(np.searchsorted(e, points[:, 0], side="right") - 1, 0, len(self.densities) - 1)
        return np.asarray(self.densities, dtype=float)[k]


@dataclass(frozen=True)
class PointMasses:
    """Finite list of weighted level-0 beliefs."""

    points: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]

    def validate(self, n_states):
        _check_simplex_rows(self.points, n_states, "point-mass density")
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.points) or np.any(w < 0) or abs(w.sum() - 1.0) > VECTOR_TOL:
            raise PriorError("point-mass weights must be a probability vector")

    def sample(self, n, n_states, rng) -> np.ndarray:
        pts = np.asarray(self.points, dtype=float)
        k = rng.choice(len(pts), size=n, p=np.asarray(self.weights, dtype=float))
        return pts[k].copy()


Density = Union[Uniform, PiecewiseConstant, PointMasses]


# ---------------------------------------------------------------------------
# Nested priors
# ---------------------------------------------------------------------------


def _probvec(x, n, what, tol=VECTOR_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,) or np.any(x < 0) or abs(x.sum() - 1.0) > tol:
        raise PriorError(f"{what} must be a probability vector of length {n}")
    x = x / x.sum()
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class NestedPrior:
    """Declarative prior over interactive states of ``frame.agent`` at ``level``.

    * level 0: ``state_marginal`` is the belief itself.
    * level 1: ``densities[(s, f)]`` describes the other agent's level-0 belief
      given state ``s`` and the other's frame ``other_frames[f]``.
    * level >= 2: ``components`` is a weighted list of the other agent's
      level-(l-1) priors; each component carries the other's frame.
    """

    level: int
    frame: Frame
    state_marginal: np.ndarray
    other_frames: tuple[Frame, ...] = ()
    frame_marginal: np.ndarray | None = None
    densities: Mapping[tuple[int, int], Density] = field(default_factory=dict)
    components: tuple[tuple[float, "NestedPrior"], ...] = ()
    name: str = ""

    def __post_init__(self):
        S = self.frame.domain.n_states
        if self.level < 0:
            raise PriorError("level must be >= 0")
        object.__setattr__(
            self, "state_marginal", _probvec(self.state_marginal, S, "state marginal")
        )
        if self.level == 1:
            if not self.other_frames:
                raise PriorError("a level-1 prior needs at least one frame for the other agent")
            for f in self.other_frames:
                if f.agent != other(self.frame.agent):
                    raise PriorError("other_frames must belong to the other agent")
            fm = self.frame_marginal
            if fm is None:
                fm = np.full(len(self.other_frames), 1.0 / len(self.other_frames))
            object.__setattr__(
                self, "frame_marginal", _probvec(fm, len(self.other_frames), "frame marginal")
            )
            for s in range(S):
                for f in range(len(self.other_frames)):
                    if self.state_marginal[s] * self.frame_marginal[f] == 0:
                        continue
                    if (s, f) not in self.densities:
                        raise PriorError(f"missing density for state {s}, frame {f}")
            for dens in self.densities.values():
                dens.validate(S)
        elif self.level >= 2:
            if not self.components:
                raise PriorError("a nested prior at level >= 2 needs mixture components")
            w = _probvec([c[0] for c in self.components], len(self.components), "mixture weights")
            for _, comp in self.components:
                if comp.level != self.level - 1:
                    raise PriorError("mixture components must sit exactly one level lower")
                if comp.frame.agent != other(self.frame.agent):
                    raise PriorError("mixture components must be the other agent's priors")
            object.__setattr__(
                self, "components", tuple((float(wk), c) for wk, (_, c) in zip(w, self.components))
            )

    @property
    def agent(self) -> str:
        return self.frame.agent

    @property
    def component_weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    @property
    def component_frames(self) -> tuple[Frame, ...]:
        return tuple(c.frame for _, c in self.components)


# ---------------------------------------------------------------------------
# Particles
# ---------------------------------------------------------------------------


class InteractiveParticle(NamedTuple):
    state: int
    model: Union[np.ndarray, "ParticleSet", None]
    frame: Frame | None
    weight: float


@dataclass(frozen=True, eq=False)
class ParticleSet:
    """N interactive-state particles held as parallel arrays.

    ``frame`` is the owner's frame. At level 1 the other agent's model is a
    level-0 belief row in ``beliefs``; at level >= 2 it is a nested
    ``ParticleSet`` one level down in ``nested``. ``weights`` is ``None`` for a
    uniformly weighted (resampled) set. Level 0 holds bare physical states.
    """

    level: int
    frame: Frame
    states: np.ndarray
    other_frames: tuple[Frame, ...] = ()
    frame_idx: np.ndarray | None = None
    beliefs: np.ndarray | None = None
    nested: tuple["ParticleSet", ...] | None = None
    weights: np.ndarray | None = None
    nominal: int | None = None
    origin: np.ndarray | None = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int64)
        n = len(states)
        object.__setattr__(self, "states", states)
        if self.nominal is None:
            object.__setattr__(self, "nominal", n)
        if self.level >= 1:
            fi = self.frame_idx
            fi = np.zeros(n, dtype=np.int64) if fi is None else np.asarray(fi, dtype=np.int64)
            if len(fi) != n:
                raise LevelMismatchError("frame_idx length differs from particle count")
            object.__setattr__(self, "frame_idx", fi)
            if not self.other_frames:
                raise LevelMismatchError("particles above level 0 need the other agent's frames")
        if self.level == 1:
            if self.beliefs is None or self.nested is not None:
                raise LevelMismatchError("level-1 particles carry level-0 belief vectors")
            b = np.asarray(self.beliefs, dtype=float)
            if b.shape != (n, self.frame.domain.n_states):
                raise LevelMismatchError(f"belief array shape {b.shape} does not match")
            object.__setattr__(self, "beliefs", b)
        elif self.level >= 2:
            if self.nested is None or self.beliefs is not None:
                raise LevelMismatchError("particles above level 1 carry nested particle sets")
            nested = tuple(self.nested)
            if len(nested) != n:
                raise LevelMismatchError("nested model count differs from particle count")
            for m in nested:
                if m.level != self.level - 1:
                    raise LevelMismatchError(
                        f"level-{self.level} particle holds a level-{m.level} nested set"
                    )
            object.__setattr__(self, "nested", nested)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (n,):
                raise LevelMismatchError("weight vector length differs from particle count")
            object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.states)

    @property
    def agent(self) -> str:
        return self.frame.agent

    @property
    def normalized_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(len(self), 1.0 / len(self))
        return self.weights / self.weights.sum()

    @property
    def particles(self) -> list[InteractiveParticle]:
        w = self.normalized_weights
        out = []
        for n in range(len(self)):
            if self.level == 0:
                model, fr = None, None
            else:
                fr = self.other_frames[self.frame_idx[n]]
                model = self.beliefs[n] if self.level == 1 else self.nested[n]
            out.append(InteractiveParticle(int(self.states[n]), model, fr, float(w[n])))
        return out

    def marginal(self) -> np.ndarray:
        """Weighted physical-state marginal."""
        return np.bincount(
            self.states, weights=self.normalized_weights, minlength=self.frame.domain.n_states
        )

    def take(self, idx, weights=None, nominal=None) -> "ParticleSet":
        idx = np.asarray(idx, dtype=np.int64)
        return ParticleSet(
            level=self.level,
            frame=self.frame,
            states=self.states[idx],
            other_frames=self.other_frames,
            frame_idx=None if self.frame_idx is None else self.frame_idx[idx],
            beliefs=None if self.beliefs is None else self.beliefs[idx],
            nested=None if self.nested is None else tuple(self.nested[k] for k in idx),
            weights=weights,
            nominal=self.nominal if nominal is None else nominal,
            origin=None if self.origin is None else self.origin[idx],
        )

    def with_weights(self, weights) -> "ParticleSet":
        return ParticleSet(
            level=self.level,
            frame=self.frame,
            states=self.states,
            other_frames=self.other_frames,
            frame_idx=self.frame_idx,
            beliefs=self.beliefs,
            nested=self.nested,
            weights=None if weights is None else np.asarray(weights, dtype=float),
            nominal=self.nominal,
            origin=self.origin,
        )

    @cached_property
    def fingerprint(self) -> int:
        """Order-independent hash of the particle multiset (weights included)."""
        h = hashlib.blake2b(digest_size=8)
        h.update(np.array([self.level, hash(self.frame) & 0xFFFFFFFF], dtype=np.int64).tobytes())
        cols = [self.states]
        if self.level >= 1:
            cols.append(self.frame_idx)
        if self.level == 1:
            cols.extend(quantize(self.beliefs).T)
        elif self.level >= 2:
            cols.append(np.array([m.fingerprint for m in self.nested], dtype=np.uint64).view(np.int64))
        if self.weights is not None:
            cols.append(quantize(self.normalized_weights))
        table = np.stack(cols, axis=1) if cols else np.zeros((0, 0), dtype=np.int64)
        order = np.lexsort(table.T[::-1])
        h.update(np.ascontiguousarray(table[order]).tobytes())
        for f in self.other_frames:
            h.update(str(hash(f)).encode())
        return int.from_bytes(h.digest(), "little")


# ---------------------------------------------------------------------------
# Sampling, weighting and resampling
# ---------------------------------------------------------------------------


def sample_initial_particles(
    prior: NestedPrior,
    N: int,
    rng,
    nested_sizes: Sequence[int] | None = None,
) -> ParticleSet:
    """Draw N particles from a nested prior, recursing into lower levels.

    ``nested_sizes`` optionally overrides the particle count used for nested
    sets, one entry per level below the top; by default every level uses N.
    """
    if N < 1:
        raise DegenerateInputError("cannot sample zero particles")
    if prior.level < 1:
        raise PriorError("particle sets are built from priors at level >= 1")
    gen = as_generator(rng)
    S = prior.frame.domain.n_states
    states = gen.choice(S, size=N, p=prior.state_marginal)

    if prior.level == 1:
        fidx = gen.choice(len(prior.other_frames), size=N, p=prior.frame_marginal)
        beliefs = np.zeros((N, S))
        for s in range(S):
            for f in range(len(prior.other_frames)):
                mask = (states == s) & (fidx == f)
                k = int(mask.sum())
                if k:
                    beliefs[mask] = prior.densities[(s, f)].sample(k, S, gen)
        return ParticleSet(
            level=1,
            frame=prior.frame,
            states=states,
            other_frames=prior.other_frames,
            frame_idx=fidx,
            beliefs=beliefs,
        )

    sizes = list(nested_sizes) if nested_sizes is not None else []
    inner_n = sizes[0] if sizes else N
    inner_sizes = sizes[1:] if sizes else None
    comp = gen.choice(len(prior.components), size=N, p=prior.component_weights)
    seeds = gen.integers(0, 2**63 - 1, size=N)
    nested = tuple(
        sample_initial_particles(
            prior.components[c][1], inner_n, np.random.default_rng(int(seed)), inner_sizes
        )
        for c, seed in zip(comp, seeds)
    )
    frames = prior.component_frames
    unique_frames = tuple(dict.fromkeys(frames))
    fidx = np.array([unique_frames.index(frames[c]) for c in comp], dtype=np.int64)
    return ParticleSet(
        level=prior.level,
        frame=prior.frame,
        states=states,
        other_frames=unique_frames,
        frame_idx=fidx,
        nested=nested,
        origin=comp,
    )


def normalize_weights(ps: ParticleSet) -> ParticleSet:
    """Rescale weights to sum to one; all-zero weights mean particle depletion."""
    if len(ps) == 0:
        raise DegenerateInputError("empty particle set")
    if ps.weights is None:
        return ps.with_weights(np.full(len(ps), 1.0 / len(ps)))
    w = ps.weights
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("particle weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0.0:
        raise ParticleDepletionError("all particle weights are zero")
    return ps.with_weights(w / total)


def resample_indices(weights: np.ndarray, N: int, gen: np.random.Generator, scheme="multinomial"):
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    if scheme == "multinomial":
        u = gen.random(N)
    elif scheme == "systematic":
        u = (gen.random() + np.arange(N)) / N
    else:
        raise ValueError(f"unknown resampling scheme {scheme!r}")
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(weights) - 1)


def resample_unbiased(ps: ParticleSet, N: int, rng, scheme: str = "multinomial") -> ParticleSet:
    """Draw N particles with replacement in proportion to their weights."""
    if len(ps) == 0:
        raise DegenerateInputError("cannot resample an empty particle set")
    if N < 1:
        raise DegenerateInputError("resample size must be >= 1")
    w = ps.normalized_weights
    if not np.all(np.isfinite(w)):
        raise ParticleDepletionError("particle weights are not normalizable")
    idx = resample_indices(w, N, as_generator(rng), scheme)
    return ps.take(idx, weights=None, nominal=N)
