"""Experiment drivers: episode simulation, filter convergence, performance profiles, timings."""
from __future__ import annotations

import csv
import io
import os
import platform
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .analysis import kl_divergence, mean_and_sd, tv_distance
from .domains import get_domain
from .errors import BudgetExceededError, ConfigError, InconsistentObservationError, ParticleDepletionError
from .filters import GridBelief, Lattice, bin_particles, grid_update_level1, ipf_step, level0_update
from .model import Frame, NestedPrior, ParticleSet, sample_initial_particles
from .planner import PolicyNode, RtsConfig, SolveContext, approx_policy, grid_plan_level1, solve_level0_policy
from .priors import default_prior, get_prior
from .rng import Stream, as_stream

DEFAULT_SEQUENCES = {
    "tiger": "L:GL,S;L:GL,S;OR:GL,S",
    "tiger-growl-only": "L:GL,S;L:GL,S;OR:GL,S",
    "mm": "M:not-defective;M:not-defective;M:not-defective",
    "uav": "listen:CR;listen:CR;listen:TR",
}


def parse_sequence(text: str) -> list[tuple[str, str]]:
    """``"L:GL,S;OR:GL,S"`` -> ``[("L", "GL,S"), ("OR", "GL,S")]``."""
    steps = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ConfigError(f"sequence step {part!r} must look like action:observation")
        a, o = part.split(":", 1)
        steps.append((a.strip(), o.strip()))
    return steps


def _int_list(value) -> list[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(v) for v in str(value).split(",") if v.strip()]


@dataclass
class ExperimentConfig:
    domain: str = "tiger"
    level: int = 1
    prior: str | None = None
    particles: list = field(default_factory=lambda: [100, 1000])
    grid: int = 200
    horizon: int = 2
    rts: str = "off"
    obs_draws: list = field(default_factory=list)
    trials: int = 10
    runs: int = 100
    seed: int = 0
    out: str | None = None
    sequence: str | None = None
    variant: str = "enum"
    gamma: float = 0.9
    other_horizon: int = 1
    repetitions: int = 5
    node_budget: int = 200000
    grid_budget: int = 200000
    timing: bool = True

    def __post_init__(self):
        self.particles = _int_list(self.particles)
        self.obs_draws = _int_list(self.obs_draws)
        if self.trials < 1 or self.runs < 1:
            raise ConfigError("trials and runs must be >= 1")
        if not self.particles or any(n < 1 for n in self.particles):
            raise ConfigError("particle counts must be positive")
        if self.level < 1:
            raise ConfigError("experiments run at nesting level >= 1")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in known or value is None:
                continue
            kw[key] = _coerce(known[key].type, value)
        return cls(**kw)

    def steps(self) -> list[tuple[str, str]]:
        return parse_sequence(self.sequence or DEFAULT_SEQUENCES.get(self.domain, ""))

    def prior_for(self, horizon: int | None = None) -> NestedPrior:
        h = self.other_horizon if horizon is None else horizon
        if self.prior:
            return get_prior(self.prior, gamma=self.gamma, horizon=h)
        return default_prior(self.domain, self.level, gamma=self.gamma, horizon=h)


def _coerce(type_name, value):
    if not isinstance(value, str):
        return value
    t = str(type_name)
    if t.startswith("int"):
        return int(value)
    if t.startswith("float"):
        return float(value)
    if t.startswith("bool"):
        return value.strip().lower() in ("1", "true", "yes", "on")
    return value


def load_config(path: str) -> dict:
    """Read ``key = value`` lines (``#`` comments) into a dict of strings."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            k, v = (x.strip() for x in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------


def hardware_string() -> str:
    return f"{platform.machine() or 'unknown'}-{os.cpu_count() or 1}cpu-py{platform.python_version()}"


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        if np.isnan(x):
            return "nan"
        return f"{float(x):.10g}"
    return str(x)


def write_csv(rows: list[dict], columns: list[str], subcommand: str, seed: int, path: str | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# nestplan {__version__} {subcommand} {hardware_string()} {seed}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_csv_field(fmt(row.get(c, ""))) for c in columns) + "\n")
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _csv_field(s: str) -> str:
    return f'"{s}"' if ("," in s or '"' in s) else s


def read_csv(text: str) -> tuple[list[str], list[dict]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return reader.fieldnames, list(reader)


# ---------------------------------------------------------------------------
# Episodes
# ---------------------------------------------------------------------------


@dataclass
class EpisodeRecord:
    seed: int
    states: list = field(default_factory=list)
    actions_i: list = field(default_factory=list)
    actions_j: list = field(default_factory=list)
    obs_i: list = field(default_factory=list)
    obs_j: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    total: float = 0.0
    replans: list = field(default_factory=list)


class FixedPolicy:
    """Always plays the same action (for scripted agents)."""

    def __init__(self, action: int):
        self.action = int(action)

    def dist(self, n_actions: int) -> np.ndarray:
        d = np.zeros(n_actions)
        d[self.action] = 1.0
        return d


class RandomPolicy:
    """Uniformly random actions."""

    def dist(self, n_actions: int) -> np.ndarray:
        return np.full(n_actions, 1.0 / n_actions)


def _draw(dist, gen) -> int:
    dist = np.asarray(dist, dtype=float)
    return int(min(np.searchsorted(np.cumsum(dist) / dist.sum(), gen.random(), side="right"), len(dist) - 1))


class _OtherAgent:
    """The other agent acting on its own model (level-0 belief or nested particle set)."""

    def __init__(self, model, frame: Frame, ctx: SolveContext, stream: Stream, rts: RtsConfig):
        self.model = model
        self.frame = frame
        self.ctx = ctx
        self.stream = stream
        self.rts = rts

    def act(self, remaining: int, gen) -> int:
        if isinstance(self.model, (FixedPolicy, RandomPolicy)):
            return _draw(self.model.dist(self.frame.n_actions), gen)
        if isinstance(self.model, ParticleSet):
            dist, _ = approx_policy(self.model, self.model.level, remaining, self.rts,
                                    self.stream.child("act", remaining), ctx=self.ctx, keep_tree=False)
        else:
            dist, _ = solve_level0_policy(self.model, self.frame, remaining)
        return _draw(dist, gen)

    def observe(self, a: int, o: int, gen, remaining: int):
        if isinstance(self.model, (FixedPolicy, RandomPolicy)):
            return
        try:
            if isinstance(self.model, ParticleSet):
                self.model = ipf_step(self.model, a, o, gen, horizon=max(remaining, 1), ctx=self.ctx)
            else:
                self.model = level0_update(self.model, a, o, self.frame)
        except (InconsistentObservationError, ParticleDepletionError):
            # an observation the other agent deems impossible leaves its model unchanged
            pass


def simulate_episode(
    domain,
    i_policy,
    j_model=None,
    horizon: int = 1,
    rng=None,
    *,
    prior=None,
    start_state: int | None = None,
    gamma: float | None = None,
    ctx: SolveContext | None = None,
    rts: RtsConfig | None = None,
) -> EpisodeRecord:
    """Play one episode of i (policy tree, FixedPolicy or RandomPolicy) against j.

    When ``j_model`` or ``start_state`` is missing, both are drawn from i's
    prior (``prior``, or the tree root's particle set).
    """
    stream = as_stream(rng)
    gen = stream.child("env").generator()
    tree = i_policy if isinstance(i_policy, PolicyNode) else None
    if tree is not None and tree.frame is not None:
        i_frame = tree.frame
    else:
        i_frame = Frame("i", domain, 0.9 if gamma is None else gamma, horizon)
    domain = i_frame.domain
    g = i_frame.gamma if gamma is None else gamma
    ctx = ctx or SolveContext(seed=stream.seed)
    rts = rts or RtsConfig()

    j_frame = Frame("j", domain, g, horizon)
    if j_model is None or start_state is None:
        source = prior if prior is not None else (tree.belief if tree is not None else None)
        if source is None:
            raise ConfigError("need a prior or a tree with a root belief to sample the start")
        if isinstance(source, ParticleSet):
            k = int(gen.integers(len(source)))
            drawn = source.take([k])
        else:
            drawn = sample_initial_particles(source, 1, stream.child("prior").generator())
        if start_state is None:
            start_state = int(drawn.states[0])
        if j_model is None:
            j_frame = drawn.other_frames[drawn.frame_idx[0]]
            j_model = drawn.beliefs[0] if drawn.level == 1 else drawn.nested[0]
    elif isinstance(j_model, tuple):
        j_model, j_frame = j_model
    j_frame = j_frame.replace(gamma=g) if j_frame.gamma != g else j_frame
    other = _OtherAgent(j_model, j_frame, ctx, stream.child("j"), rts)

    rec = EpisodeRecord(seed=stream.seed, states=[int(start_state)])
    s = int(start_state)
    node = tree
    history: list[tuple[int, int]] = []
    view = domain.view("i")
    for t in range(horizon):
        remaining = horizon - t
        if domain.absorbing[s]:
            break
        if tree is not None:
            if node is None:
                node = _replan(tree, history, remaining, stream.child("replan", t), ctx, rts)
                rec.replans.append(t)
            ai = _draw(node.dist, gen)
        else:
            ai = _draw(i_policy.dist(i_frame.n_actions), gen)
        aj = other.act(remaining, gen)
        r = float(view.R_own[ai, aj, s])
        s_next = _draw(domain.transition[ai, aj, s], gen)
        oi = _draw(domain.obsfn["i"][ai, aj, s_next], gen)
        oj = _draw(domain.obsfn["j"][ai, aj, s_next], gen)
        rec.actions_i.append(ai)
        rec.actions_j.append(aj)
        rec.obs_i.append(oi)
        rec.obs_j.append(oj)
        rec.rewards.append(r)
        rec.total += (g**t) * r
        rec.states.append(s_next)
        other.observe(aj, oj, gen, remaining - 1)
        history.append((ai, oi))
        if node is not None:
            node = node.child(ai, oi)
        s = s_next
    return rec


def _replan(tree: PolicyNode, history, remaining: int, stream: Stream, ctx: SolveContext, rts: RtsConfig) -> PolicyNode:
    """Rebuild i's belief along the played history and plan for the remaining steps."""
    belief = tree.belief
    if not isinstance(belief, ParticleSet):
        raise ConfigError("replanning needs the root particle set on the policy tree")
    for k, (a, o) in enumerate(history):
        try:
            belief = ipf_step(belief, a, o, stream.child("replay", k).generator(),
                              horizon=tree.horizon - k, ctx=ctx)
        except ParticleDepletionError:
            # nothing consistent with the history survives; keep the last belief
            break
    _, node = approx_policy(belief, belief.level, remaining, rts, stream.child("plan"), ctx=ctx)
    node.belief = belief
    return node


# ---------------------------------------------------------------------------
# Filter convergence experiments
# ---------------------------------------------------------------------------


def posterior_histogram(ps: ParticleSet, G: int, grid: GridBelief | None = None) -> np.ndarray:
    """Histogram used to compare posteriors.

    Level 1 with a grid: (state, frame, vertex) cells. Otherwise, for small
    state spaces: (state, lattice cell of the other agent's state marginal);
    for large ones the physical-state marginal alone.
    """
    if grid is not None:
        return bin_particles(ps, grid)
    S = ps.frame.domain.n_states
    if S > 3:
        return ps.marginal()
    lat = Lattice(S, G)
    if ps.level == 1:
        feats = ps.beliefs
    else:
        feats = np.array([m.marginal() for m in ps.nested])
    w = ps.normalized_weights
    out = np.zeros((S, lat.size))
    for s in range(S):
        sel = ps.states == s
        if sel.any():
            out[s] = lat.histogram(feats[sel], w[sel])
    return out


FILTER_COLUMNS_HEAD = ["step", "N", "seed", "kl_to_grid", "tv_to_grid"]
FILTER_COLUMNS_TAIL = ["depletion_flag", "wall_time_ms"]


def run_filter_experiment(cfg: ExperimentConfig) -> str:
    """Per-(N, trial, step) divergence rows against the grid (level 1) or the largest-N run."""
    if cfg.level not in (1, 2):
        raise ConfigError("filter experiments support levels 1 and 2")
    domain = get_domain(cfg.domain)
    prior = cfg.prior_for()
    steps = cfg.steps()
    master = Stream(cfg.seed)
    use_grid = cfg.level == 1 and domain.n_states <= 3

    grids = []
    if use_grid:
        g = GridBelief.from_prior(prior, cfg.grid)
        for a, o in steps:
            g = grid_update_level1(g, a, o, method="scatter" if domain.n_states > 2 else "integrate")
            grids.append(g)

    def run(N, trial):
        stream = master.child("filter", N, trial)
        ps = sample_initial_particles(prior, N, stream.child("prior").generator())
        out = []
        for k, (a, o) in enumerate(steps):
            t0 = time.perf_counter()
            try:
                ps = ipf_step(ps, a, o, stream.child("step", k).generator(), variant=cfg.variant)
            except ParticleDepletionError:
                out.extend([None] * (len(steps) - k))
                return out
            out.append((ps, (time.perf_counter() - t0) * 1e3))
        return out

    results = {(N, t): run(N, t) for N in sorted(set(cfg.particles)) for t in range(cfg.trials)}
    n_ref = max(cfg.particles)
    rows = []
    for N in sorted(set(cfg.particles)):
        for t in range(cfg.trials):
            for k in range(len(steps)):
                item = results[(N, t)][k]
                row = {"step": k + 1, "N": N, "seed": t}
                if item is None:
                    row.update(kl_to_grid=np.nan, tv_to_grid=np.nan, depletion_flag=1, wall_time_ms=np.nan)
                    for s in domain.states:
                        row[f"marginal_{s}"] = np.nan
                    rows.append(row)
                    continue
                ps, ms = item
                if use_grid:
                    p = posterior_histogram(ps, cfg.grid, grids[k])
                    q = grids[k].mass
                else:
                    ref = results[(n_ref, t)][k]
                    p = posterior_histogram(ps, cfg.grid)
                    q = posterior_histogram(ref[0], cfg.grid) if ref is not None else np.full_like(p, np.nan)
                row["kl_to_grid"] = kl_divergence(p, q) if np.all(np.isfinite(q)) else np.nan
                row["tv_to_grid"] = tv_distance(p, q) if np.all(np.isfinite(q)) else np.nan
                for s, m in zip(domain.states, ps.marginal()):
                    row[f"marginal_{s}"] = m
                row["depletion_flag"] = 0
                row["wall_time_ms"] = ms if cfg.timing else np.nan
                rows.append(row)
    columns = FILTER_COLUMNS_HEAD + [f"marginal_{s}" for s in domain.states] + FILTER_COLUMNS_TAIL
    text = write_csv(rows, columns, "filter", cfg.seed, cfg.out)
    if cfg.out:
        summary = summarize(rows, ["N", "step"], ["kl_to_grid", "tv_to_grid"])
        write_csv(summary, list(summary[0].keys()), "filter-summary", cfg.seed, _sibling(cfg.out, ".summary.csv"))
        write_plot_script(_sibling(cfg.out, ".gp"), _sibling(cfg.out, ".summary.csv"), "N", "kl_to_grid_mean",
                          "kl_to_grid_sd", "particles", "KL divergence (nats)", logx=True)
    return text


def summarize(rows: list[dict], keys: list[str], metrics: list[str]) -> list[dict]:
    """Mean and sample standard deviation of each metric per key combination (NaNs skipped)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for gk in sorted(groups):
        row = dict(zip(keys, gk))
        for m in metrics:
            vals = np.array([float(r[m]) for r in groups[gk]], dtype=float)
            vals = vals[np.isfinite(vals)]
            mu, sd = mean_and_sd(vals) if len(vals) else (np.nan, np.nan)
            row[f"{m}_mean"] = mu
            row[f"{m}_sd"] = sd
            row[f"{m}_n"] = len(vals)
        out.append(row)
    return out


def _sibling(path: str, suffix: str) -> str:
    root, _ = os.path.splitext(path)
    return root + suffix


def write_plot_script(path, data, xcol, ycol, errcol, xlabel, ylabel, logx=False):
    """Emit a gnuplot script that draws ``ycol`` with ``errcol`` error bars against ``xcol``."""
    _, rows = read_csv(open(data, encoding="utf-8").read())
    header = list(rows[0].keys()) if rows else []
    col = {name: header.index(name) + 1 for name in header}
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set logscale x" if logx else "",
        f"set output '{os.path.basename(_sibling(path, '.png'))}'",
        "set terminal pngcairo size 800,600",
        f"plot '{os.path.basename(data)}' every ::1 using {col.get(xcol, 1)}:{col.get(ycol, 2)}:{col.get(errcol, 3)} "
        "with yerrorlines title ''",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(x for x in lines if x) + "\n")


# ---------------------------------------------------------------------------
# Performance profiles
# ---------------------------------------------------------------------------

PROFILE_COLUMNS = [
    "N", "obs_draws", "trial", "mean_reward", "sd_reward", "random_mean_reward", "random_sd_reward",
    "root_value", "nodes", "model_solves", "replans", "wall_time_ms",
]


def evaluate_policy(tree: PolicyNode, cfg: ExperimentConfig, prior, stream: Stream, ctx=None) -> tuple[list, int]:
    rewards, replans = [], 0
    domain = get_domain(cfg.domain)
    for r in range(cfg.runs):
        rec = simulate_episode(domain, tree, None, cfg.horizon, stream.child("run", r), prior=prior,
                               ctx=ctx, rts=RtsConfig.parse(cfg.rts))
        rewards.append(rec.total)
        replans += len(rec.replans)
    return rewards, replans


def run_profile_experiment(cfg: ExperimentConfig) -> str:
    """Mean discounted reward of approximate policies per particle count (and observation draws)."""
    domain = get_domain(cfg.domain)
    prior = cfg.prior_for(cfg.horizon)
    master = Stream(cfg.seed)
    draws = cfg.obs_draws or [0]
    rows = []
    sim_ctx = SolveContext(seed=cfg.seed)
    for N in sorted(set(cfg.particles)):
        for nd in draws:
            rts = RtsConfig(True, nd) if nd else RtsConfig.parse(cfg.rts)
            for t in range(cfg.trials):
                stream = master.child("profile", N, nd, t)
                ps = sample_initial_particles(prior, N, stream.child("prior").generator())
                ctx = SolveContext(seed=stream.child("ctx").generator().integers(2**62), rts=rts,
                                   node_budget=cfg.node_budget)
                t0 = time.perf_counter()
                _, tree = approx_policy(ps, cfg.level, cfg.horizon, rts, stream.child("plan"), ctx=ctx)
                ms = (time.perf_counter() - t0) * 1e3
                # episodes share seeds across configurations so comparisons are paired
                eval_stream = master.child("episodes", t)
                rewards, replans = evaluate_policy(tree, cfg, prior, eval_stream, sim_ctx)
                random_rewards = [
                    simulate_episode(domain, RandomPolicy(), None, cfg.horizon, eval_stream.child("run", r),
                                     prior=prior, gamma=cfg.gamma, ctx=sim_ctx).total
                    for r in range(cfg.runs)
                ]
                mu, sd = mean_and_sd(rewards)
                rmu, rsd = mean_and_sd(random_rewards)
                rows.append({
                    "N": N, "obs_draws": nd, "trial": t, "mean_reward": mu, "sd_reward": sd,
                    "random_mean_reward": rmu, "random_sd_reward": rsd, "root_value": tree.value,
                    "nodes": ctx.nodes, "model_solves": ctx.model_solves, "replans": replans,
                    "wall_time_ms": ms if cfg.timing else np.nan,
                })
    text = write_csv(rows, PROFILE_COLUMNS, "profile", cfg.seed, cfg.out)
    if cfg.out:
        summary = summarize(rows, ["N", "obs_draws"], ["mean_reward", "random_mean_reward"])
        write_csv(summary, list(summary[0].keys()), "profile-summary", cfg.seed, _sibling(cfg.out, ".summary.csv"))
        write_plot_script(_sibling(cfg.out, ".gp"), _sibling(cfg.out, ".summary.csv"), "N", "mean_reward_mean",
                          "mean_reward_sd", "particles", "mean discounted reward", logx=True)
    return text


def grid_reference_value(cfg: ExperimentConfig, G: int = 100) -> float:
    """Expected value of the grid planner's policy at the configured horizon."""
    prior = cfg.prior_for(cfg.horizon)
    gb = GridBelief.from_prior(prior, G, other_horizon=cfg.horizon)
    _, node = grid_plan_level1(gb, horizon=cfg.horizon)
    return node.value


# ---------------------------------------------------------------------------
# Runtime benchmarks
# ---------------------------------------------------------------------------

BENCH_COLUMNS = ["task", "method", "size", "horizon", "repetitions", "mean_s", "sd_s", "status"]


def _time(fn, reps: int) -> list[float]:
    fn()  # warm-up, discarded
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return out


def run_runtime_benchmark(cfg: ExperimentConfig, tasks=("filter", "plan")) -> str:
    """Wall-clock comparison of I-PF vs grid updates and of planning with and without RTS."""
    domain = get_domain(cfg.domain)
    prior = cfg.prior_for()
    a, o = cfg.steps()[0]
    reps = max(1, cfg.repetitions)
    rows = []

    def add(task, method, size, horizon, samples, status="ok"):
        if samples:
            mu, sd = mean_and_sd(samples)
        else:
            mu, sd = np.nan, np.nan
        rows.append({"task": task, "method": method, "size": size, "horizon": horizon,
                     "repetitions": len(samples), "mean_s": mu, "sd_s": sd, "status": status})

    if "filter" in tasks:
        for N in sorted(set(cfg.particles)):
            ps = sample_initial_particles(prior, N, Stream(cfg.seed).child("bench", N).generator())
            add("filter", "ipf", N, 1, _time(lambda: ipf_step(ps, a, o, cfg.seed), reps))
            if cfg.level != 1:
                continue
            lat_size = Lattice(domain.n_states, N).size if domain.n_states <= 3 else None
            if lat_size is None or lat_size > cfg.grid_budget:
                add("filter", "grid-integrate", N, 1, [], "*")
                continue
            gb = GridBelief.from_prior(prior, N)
            methods = ("integrate", "scatter") if domain.n_states == 2 else ("scatter",)
            for m in methods:
                add("filter", f"grid-{m}", N, 1, _time(lambda: grid_update_level1(gb, a, o, method=m), reps))

    if "plan" in tasks:
        for N in sorted(set(cfg.particles)):
            ps = sample_initial_particles(prior, N, Stream(cfg.seed).child("bench-plan", N).generator())
            variants = [("no-rts", RtsConfig())]
            rts = RtsConfig.parse(cfg.rts)
            variants.append(("rts", rts if rts.enabled else RtsConfig.tiger_default()))
            for name, r in variants:
                def job(r=r):
                    ctx = SolveContext(seed=cfg.seed, rts=r, node_budget=cfg.node_budget)
                    approx_policy(ps, cfg.level, cfg.horizon, r, cfg.seed, ctx=ctx, keep_tree=False)
                try:
                    add("plan", name, N, cfg.horizon, _time(job, reps))
                except BudgetExceededError:
                    add("plan", name, N, cfg.horizon, [], "*")
    return write_csv(rows, BENCH_COLUMNS, "bench", cfg.seed, cfg.out)
