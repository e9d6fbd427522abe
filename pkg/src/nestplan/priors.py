"""Built-in nested priors and the prior file format.

Prior file layout::

    [prior]
    level = 1
    domain = tiger
    agent = i
    gamma = 0.9
    horizon = 1

    [states]
    TL 0.5
    TR 0.5

    [frames]            # the other agent's frames: label gamma horizon weight
    f0 0.9 1 1.0

    [density TL f0]
    uniform
    [density TR f0]
    piecewise 0,0.25,0.5,0.75,1 0.2,0.4,1.0,2.4
    # or one weighted point per line:  point 0.5,0.5 0.3

Level >= 2 priors replace ``[frames]`` and ``[density ...]`` with::

    [components]
    0.5 tiger-fig3a
    0.5 other-prior.txt
"""
from __future__ import annotations

import os

import numpy as np

from .domains import get_domain
from .errors import ConfigError, PriorError
from .model import Domain, Frame, NestedPrior, PiecewiseConstant, PointMasses, Uniform, other

# Bin masses for the "j likely knows where the tiger is" level-1 belief.
# With TL, j's belief in TL mostly sits above one half; mirrored for TR.
INFORMED_EDGES = (0.0, 0.25, 0.5, 0.75, 1.0)
INFORMED_MASSES_TL = (0.05, 0.1, 0.25, 0.6)


def _frames(domain: Domain, agent: str, gamma: float, horizon: int):
    return Frame(agent, domain, gamma, horizon), Frame(other(agent), domain, gamma, horizon)


def uniform_level1(domain: Domain, agent="i", gamma=0.9, horizon=1, name="uniform") -> NestedPrior:
    """Uninformed about the state and about the other agent's level-0 belief."""
    own, oth = _frames(domain, agent, gamma, horizon)
    S = domain.n_states
    return NestedPrior(
        level=1,
        frame=own,
        state_marginal=np.full(S, 1.0 / S),
        other_frames=(oth,),
        densities={(s, 0): Uniform() for s in range(S)},
        name=name,
    )


def tiger_informed_level1(domain=None, agent="i", gamma=0.9, horizon=1) -> NestedPrior:
    """Uninformed about the tiger, but believes the other agent likely knows where it is."""
    domain = domain or get_domain("tiger")
    own, oth = _frames(domain, agent, gamma, horizon)
    width = np.diff(INFORMED_EDGES)
    dens_tl = PiecewiseConstant(INFORMED_EDGES, tuple(np.array(INFORMED_MASSES_TL) / width))
    dens_tr = PiecewiseConstant(INFORMED_EDGES, tuple(np.array(INFORMED_MASSES_TL[::-1]) / width))
    return NestedPrior(
        level=1,
        frame=own,
        state_marginal=np.array([0.5, 0.5]),
        other_frames=(oth,),
        densities={(0, 0): dens_tl, (1, 0): dens_tr},
        name="informed",
    )


def mm_informed_level1(domain=None, agent="i", gamma=0.9, horizon=1) -> NestedPrior:
    """MM analogue of the informed tiger belief, as weighted points near each vertex."""
    domain = domain or get_domain("mm")
    own, oth = _frames(domain, agent, gamma, horizon)
    S = domain.n_states
    dens = {}
    for s in range(S):
        sharp = np.full(S, 0.1)
        sharp[s] = 0.8
        dens[(s, 0)] = PointMasses((tuple(sharp), tuple(np.full(S, 1.0 / S))), (0.6, 0.4))
    return NestedPrior(
        level=1,
        frame=own,
        state_marginal=np.full(S, 1.0 / S),
        other_frames=(oth,),
        densities=dens,
        name="informed",
    )


def mixture_level2(components, weights=None, agent="i", gamma=0.9, horizon=1, name="mixture"):
    """Level-2 prior: uniform over states, mixing the other agent's level-1 priors."""
    comps = list(components)
    if weights is None:
        weights = [1.0 / len(comps)] * len(comps)
    domain = comps[0].frame.domain
    own = Frame(agent, domain, gamma, horizon)
    S = domain.n_states
    return NestedPrior(
        level=2,
        frame=own,
        state_marginal=np.full(S, 1.0 / S),
        components=tuple(zip(weights, comps)),
        name=name,
    )


def uav_level1(domain=None, start=(2, 0), agent="i", gamma=0.9, horizon=1) -> NestedPrior:
    """UAV knows its own cell; the target may be anywhere else and is unsure of the UAV."""
    domain = domain or get_domain("uav")
    own, oth = _frames(domain, agent, gamma, horizon)
    li = 2 * start[0] + start[1]
    marg = np.zeros(36)
    for lt in range(6):
        if lt != li:
            marg[6 * li + lt] = 1.0
    marg /= marg.sum()
    dens = {}
    for s in np.flatnonzero(marg):
        lt = s % 6
        # the target knows its own cell and that it has not been spotted
        support = tuple(6 * x + lt for x in range(6) if x != lt)
        dens[(int(s), 0)] = Uniform(support)
    return NestedPrior(
        level=1, frame=own, state_marginal=marg, other_frames=(oth,), densities=dens, name="uav"
    )


def _tiger_level2(domain=None, **kw):
    domain = domain or get_domain("tiger")
    j_kw = dict(kw, agent=other(kw.get("agent", "i")))
    return mixture_level2(
        [uniform_level1(domain, **j_kw), tiger_informed_level1(domain, **j_kw)], **kw
    )


def _mm_level2(domain=None, **kw):
    domain = domain or get_domain("mm")
    j_kw = dict(kw, agent=other(kw.get("agent", "i")))
    return mixture_level2([uniform_level1(domain, **j_kw), mm_informed_level1(domain, **j_kw)], **kw)


BUILTIN_PRIORS = {
    "tiger-fig3a": lambda domain=None, **kw: uniform_level1(domain or get_domain("tiger"), **kw),
    "tiger-fig3b": tiger_informed_level1,
    "tiger-level2": _tiger_level2,
    "tiger-growl-fig3a": lambda domain=None, **kw: uniform_level1(
        domain or get_domain("tiger-growl-only"), **kw
    ),
    "mm-uniform": lambda domain=None, **kw: uniform_level1(domain or get_domain("mm"), **kw),
    "mm-informed": mm_informed_level1,
    "mm-level2": _mm_level2,
    "uav-level1": uav_level1,
}

DEFAULT_PRIOR = {
    ("tiger", 1): "tiger-fig3a",
    ("tiger", 2): "tiger-level2",
    ("tiger-growl-only", 1): "tiger-growl-fig3a",
    ("mm", 1): "mm-uniform",
    ("mm", 2): "mm-level2",
    ("uav", 1): "uav-level1",
}


def get_prior(name_or_path: str, gamma=0.9, horizon=1) -> NestedPrior:
    if name_or_path in BUILTIN_PRIORS:
        return BUILTIN_PRIORS[name_or_path](gamma=gamma, horizon=horizon)
    if not os.path.exists(name_or_path):
        known = ", ".join(BUILTIN_PRIORS)
        raise ConfigError(f"unknown prior {name_or_path!r} (built-ins: {known})")
    with open(name_or_path, encoding="utf-8") as fh:
        return load_prior(fh.read(), base_dir=os.path.dirname(name_or_path))


def default_prior(domain_name: str, level: int, gamma=0.9, horizon=1) -> NestedPrior:
    try:
        return get_prior(DEFAULT_PRIOR[(domain_name, level)], gamma=gamma, horizon=horizon)
    except KeyError:
        raise ConfigError(f"no built-in level-{level} prior for domain {domain_name!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def load_prior(text: str, base_dir: str = ".") -> NestedPrior:
    header: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = " ".join(line[1:-1].split())
            sections.setdefault(current, [])
            continue
        if current is None:
            raise PriorError(f"line {lineno}: content before the first section header")
        if current == "prior":
            if "=" not in line:
                raise PriorError(f"line {lineno}: expected key = value")
            k, v = (x.strip() for x in line.split("=", 1))
            header[k] = v
        else:
            sections[current].append(line)

    try:
        level = int(header.get("level", "1"))
        domain = get_domain(header["domain"])
    except KeyError:
        raise PriorError("the [prior] section must name a domain") from None
    agent = header.get("agent", "i")
    gamma = float(header.get("gamma", "0.9"))
    horizon = int(header.get("horizon", "1"))
    own = Frame(agent, domain, gamma, horizon)
    name = header.get("name", "file")

    S = domain.n_states
    marg = np.zeros(S)
    for line in sections.get("states", []):
        label, p = line.split()
        if label not in domain.states:
            raise PriorError(f"unknown state {label!r}")
        marg[domain.state_index(label)] = float(p)
    if not sections.get("states"):
        marg[:] = 1.0 / S

    if level >= 2:
        comps = []
        for line in sections.get("components", []):
            w, ref = line.split(None, 1)
            path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
            target = ref if ref.strip() in BUILTIN_PRIORS or not os.path.exists(path) else path
            sub = get_prior(target.strip(), gamma=gamma, horizon=horizon)
            if sub.frame.agent == agent:
                # built-ins default to agent i; re-seat them for the other agent
                sub = _reseat(sub, other(agent))
            comps.append((float(w), sub))
        return NestedPrior(level=level, frame=own, state_marginal=marg, components=tuple(comps), name=name)

    frame_labels, frames, fweights = [], [], []
    for line in sections.get("frames", []):
        label, g, h, w = line.split()
        frame_labels.append(label)
        frames.append(Frame(other(agent), domain, float(g), int(h)))
        fweights.append(float(w))
    if not frames:
        frame_labels, frames, fweights = ["f0"], [Frame(other(agent), domain, gamma, horizon)], [1.0]

    densities = {}
    for sec, lines in sections.items():
        if not sec.startswith("density"):
            continue
        parts = sec.split()
        if len(parts) != 3:
            raise PriorError(f"density section [{sec}] must name a state and a frame")
        s = domain.state_index(parts[1])
        f = frame_labels.index(parts[2])
        densities[(s, f)] = _parse_density(lines, domain)
    return NestedPrior(
        level=level,
        frame=own,
        state_marginal=marg,
        other_frames=tuple(frames),
        frame_marginal=np.array(fweights),
        densities=densities,
        name=name,
    )


def _parse_density(lines, domain: Domain):
    kind = lines[0].split()[0]
    if kind == "uniform":
        labels = lines[0].split()[1:]
        return Uniform(tuple(domain.state_index(x) for x in labels) or None)
    if kind == "piecewise":
        _, edges, dens = lines[0].split()
        return PiecewiseConstant(_floats(edges), _floats(dens))
    if kind == "point":
        pts, ws = [], []
        for line in lines:
            _, vec, w = line.split()
            pts.append(_floats(vec))
            ws.append(float(w))
        return PointMasses(tuple(pts), tuple(ws))
    raise PriorError(f"unknown density kind {kind!r}")


def _reseat(prior: NestedPrior, agent: str) -> NestedPrior:
    """Rebuild a built-in prior for the opposite agent role."""
    if prior.level == 1:
        return NestedPrior(
            level=1,
            frame=prior.frame.counterpart(),
            state_marginal=prior.state_marginal,
            other_frames=tuple(f.counterpart() for f in prior.other_frames),
            frame_marginal=prior.frame_marginal,
            densities=prior.densities,
            name=prior.name,
        )
    return NestedPrior(
        level=prior.level,
        frame=prior.frame.counterpart(),
        state_marginal=prior.state_marginal,
        components=tuple((w, _reseat(c, other(agent))) for w, c in prior.components),
        name=prior.name,
    )
