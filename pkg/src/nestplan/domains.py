"""Built-in domains and the line-oriented domain file format.

File layout::

    [name]
    tiger
    [states]
    TL TR
    [actions i]
    OL OR L
    ...
    [transition]
    # a_i a_j state  p(s'_1) p(s'_2) ...
    L L TL 1.0 0
    * * * 0.5 0.5

``*`` matches any label in its column. The row with the most explicit
columns wins; among equally specific rows the later one wins. Values may be
written as short products or quotients such as ``0.85*0.05`` or ``1/6``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .model import AGENTS, Domain, validate_domain

# ---------------------------------------------------------------------------
# Multiagent tiger
# ---------------------------------------------------------------------------

TIGER_GROWL_ACCURACY = 0.85
TIGER_CREAK_ACCURACY = 0.9
TIGER_CREAK_NOISE = 0.05


def _tiger_tables(growl_only_j: bool = False):
    states = ("TL", "TR")
    acts = ("OL", "OR", "L")
    growls, creaks = ("GL", "GR"), ("CL", "CR", "S")
    joint_obs = tuple(f"{g},{c}" for g in growls for c in creaks)
    OL, OR, L = 0, 1, 2

    T = np.empty((3, 3, 2, 2))
    T[...] = 0.5
    T[L, L] = np.eye(2)

    def growl(s_next, g):
        correct = (s_next == 0) == (g == 0)
        return TIGER_GROWL_ACCURACY if correct else 1.0 - TIGER_GROWL_ACCURACY

    def creak(a_other, c):
        # creak caused by the other agent's action; silence when it listened
        target = {OL: 0, OR: 1, L: 2}[a_other]
        return TIGER_CREAK_ACCURACY if c == target else TIGER_CREAK_NOISE

    def own_obs(a_own, a_oth):
        out = np.empty((2, 6))
        for s in range(2):
            for g, c in itertools.product(range(2), range(3)):
                if a_own == L:
                    out[s, 3 * g + c] = growl(s, g) * creak(a_oth, c)
                else:
                    out[s, 3 * g + c] = 1.0 / 6.0
        return out

    def own_reward(a_own):
        if a_own == L:
            return np.array([-1.0, -1.0])
        if a_own == OR:
            return np.array([10.0, -100.0])
        return np.array([-100.0, 10.0])

    O_i = np.empty((3, 3, 2, 6))
    R_i = np.empty((3, 3, 2))
    R_j = np.empty((3, 3, 2))
    for ai, aj in itertools.product(range(3), range(3)):
        O_i[ai, aj] = own_obs(ai, aj)
        R_i[ai, aj] = own_reward(ai)
        R_j[ai, aj] = own_reward(aj)

    if growl_only_j:
        obs_j = growls
        O_j = np.empty((3, 3, 2, 2))
        for ai, aj in itertools.product(range(3), range(3)):
            full = own_obs(aj, ai)
            O_j[ai, aj] = full.reshape(2, 2, 3).sum(axis=2)
    else:
        obs_j = joint_obs
        O_j = np.empty((3, 3, 2, 6))
        for ai, aj in itertools.product(range(3), range(3)):
            O_j[ai, aj] = own_obs(aj, ai)

    return states, acts, joint_obs, obs_j, T, O_i, O_j, R_i, R_j


def build_tiger() -> Domain:
    states, acts, obs_i, obs_j, T, O_i, O_j, R_i, R_j = _tiger_tables()
    return Domain(
        name="tiger",
        states=states,
        actions={"i": acts, "j": acts},
        observations={"i": obs_i, "j": obs_j},
        transition=T,
        obsfn={"i": O_i, "j": O_j},
        reward={"i": R_i, "j": R_j},
    )


def build_tiger_growl_only() -> Domain:
    """Tiger with j hearing growls only (creaks summed out of j's table)."""
    states, acts, obs_i, obs_j, T, O_i, O_j, R_i, R_j = _tiger_tables(growl_only_j=True)
    return Domain(
        name="tiger-growl-only",
        states=states,
        actions={"i": acts, "j": acts},
        observations={"i": obs_i, "j": obs_j},
        transition=T,
        obsfn={"i": O_i, "j": O_j},
        reward={"i": R_i, "j": R_j},
    )


# ---------------------------------------------------------------------------
# Multiagent machine maintenance
# ---------------------------------------------------------------------------

MM_DEGRADE = np.array([[0.81, 0.18, 0.01], [0.0, 0.9, 0.1], [0.0, 0.0, 1.0]])
MM_RESET = np.array([[1.0, 0.0, 0.0], [0.95, 0.05, 0.0], [0.95, 0.0, 0.05]])
MM_EXAMINE = np.array([[0.75, 0.25], [0.5, 0.5], [0.25, 0.75]])

# rows: own-agent actions M, E, I, R; columns: other's action; entries per state
MM_REWARD_I = {
    ("M", "M"): (1.805, 0.95, 0.5),
    ("M", "E"): (1.555, 0.7, 0.25),
    ("M", "I"): (0.4025, -1.025, -2.25),
    ("M", "R"): (-1.0975, -1.525, -1.75),
    ("E", "M"): (1.5555, 0.7, 0.25),
    ("E", "E"): (1.305, 0.45, 0.0),
    ("E", "I"): (0.1525, -1.275, -2.5),
    ("E", "R"): (-1.3475, -1.775, -2.0),
    ("I", "M"): (0.4025, -1.025, -2.25),
    ("I", "E"): (0.1525, -1.275, -2.5),
    ("I", "I"): (-1.0, -3.00, -5.00),
    ("I", "R"): (-2.5, -3.5, -4.5),
    ("R", "M"): (-1.0975, -1.525, -1.75),
    ("R", "E"): (-1.3475, -1.775, -2.0),
    ("R", "I"): (-2.5, -3.5, -4.5),
    ("R", "R"): (-4.0, -4.0, -4.0),
}
MM_REWARD_J = dict(MM_REWARD_I)
MM_REWARD_J[("E", "M")] = (1.555, 0.7, 0.25)


def build_mm() -> Domain:
    states = ("0-fail", "1-fail", "2-fail")
    acts = ("M", "E", "I", "R")
    obs = ("not-defective", "defective")
    produce = {"M", "E"}

    T = np.empty((4, 4, 3, 3))
    O_i = np.empty((4, 4, 3, 2))
    O_j = np.empty((4, 4, 3, 2))
    R_i = np.empty((4, 4, 3))
    R_j = np.empty((4, 4, 3))
    quiet = np.array([0.95, 0.05])

    def obs_row(a_own, a_oth):
        if a_own not in produce or a_oth not in produce:
            return np.tile(quiet, (3, 1))
        if a_own == "M":
            return np.full((3, 2), 0.5)
        return MM_EXAMINE

    for (ai, a), (aj, b) in itertools.product(enumerate(acts), enumerate(acts)):
        T[ai, aj] = MM_DEGRADE if (a in produce and b in produce) else MM_RESET
        O_i[ai, aj] = obs_row(a, b)
        O_j[ai, aj] = obs_row(b, a)
        R_i[ai, aj] = MM_REWARD_I[(a, b)]
        R_j[ai, aj] = MM_REWARD_J[(a, b)]

    return Domain(
        name="mm",
        states=states,
        actions={"i": acts, "j": acts},
        observations={"i": obs, "j": obs},
        transition=T,
        obsfn={"i": O_i, "j": O_j},
        reward={"i": R_i, "j": R_j},
    )


# ---------------------------------------------------------------------------
# UAV reconnaissance
# ---------------------------------------------------------------------------

UAV_ROWS = ("top", "center", "bottom")
UAV_COLUMNS = ("side", "center")
UAV_ACTIONS = ("move_N", "move_S", "move_E", "move_W", "listen")
UAV_OBS = ("TR", "CR", "BR")


@dataclass(frozen=True)
class UavConfig:
    obs_accuracy: float = 0.8
    target_alert: float = 0.1
    spot_reward: float = 1.0
    step_reward: float = 0.0
    observe_while_moving: bool = False

    def validate(self):
        for name in ("obs_accuracy", "target_alert"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"UAV {name} must lie in [0, 1], got {v}")
        for name in ("spot_reward", "step_reward"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"UAV {name} must be finite")


def uav_location(row: int, col: int) -> int:
    return 2 * row + col


def uav_state(loc_i: int, loc_t: int) -> int:
    return 6 * loc_i + loc_t


def _uav_move(loc: int, action: str) -> int:
    row, col = divmod(loc, 2)
    if action == "move_N":
        row = max(row - 1, 0)
    elif action == "move_S":
        row = min(row + 1, 2)
    elif action in ("move_E", "move_W"):
        # the side columns collapse into one abstract cell, so both lateral
        # moves swap between side and center
        col = 1 - col
    return uav_location(row, col)


def build_uav(cfg: UavConfig | None = None) -> Domain:
    """Abstract 3x3 UAV/target pursuit with side columns merged (36 states)."""
    cfg = cfg or UavConfig()
    cfg.validate()
    locs = [f"{r}-{c}" for r in UAV_ROWS for c in UAV_COLUMNS]
    states = tuple(f"{a}/{b}" for a in locs for b in locs)
    S, A = 36, len(UAV_ACTIONS)
    colocated = np.array([s // 6 == s % 6 for s in range(S)])

    T = np.zeros((A, A, S, S))
    for ai, a in enumerate(UAV_ACTIONS):
        for aj, b in enumerate(UAV_ACTIONS):
            for s in range(S):
                if colocated[s]:
                    T[ai, aj, s, s] = 1.0
                    continue
                li, lt = divmod(s, 6)
                li2 = _uav_move(li, a)
                if b == "listen":
                    T[ai, aj, s, uav_state(li2, lt)] += 1.0
                else:
                    T[ai, aj, s, uav_state(li2, _uav_move(lt, b))] += cfg.target_alert
                    T[ai, aj, s, uav_state(li2, lt)] += 1.0 - cfg.target_alert

    def row_obs(true_row: int, informative: bool) -> np.ndarray:
        if not informative:
            return np.full(3, 1.0 / 3.0)
        out = np.full(3, (1.0 - cfg.obs_accuracy) / 2.0)
        out[true_row] = cfg.obs_accuracy
        return out

    O = {k: np.zeros((A, A, S, 3)) for k in AGENTS}
    for ai, a in enumerate(UAV_ACTIONS):
        for aj, b in enumerate(UAV_ACTIONS):
            for s in range(S):
                li, lt = divmod(s, 6)
                O["i"][ai, aj, s] = row_obs(lt // 2, a == "listen" or cfg.observe_while_moving)
                O["j"][ai, aj, s] = row_obs(li // 2, b == "listen" or cfg.observe_while_moving)

    # expected immediate reward: spotting happens on entering the target's cell
    spot = T[:, :, :, colocated].sum(axis=3)
    R_i = np.where(colocated[None, None, :], 0.0, cfg.spot_reward * spot + cfg.step_reward)
    R_j = np.where(colocated[None, None, :], 0.0, -R_i)

    return Domain(
        name="uav",
        states=states,
        actions={"i": UAV_ACTIONS, "j": UAV_ACTIONS},
        observations={"i": UAV_OBS, "j": UAV_OBS},
        transition=T,
        obsfn=O,
        reward={"i": R_i, "j": R_j},
    )


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

BUILTIN_DOMAINS = {
    "tiger": build_tiger,
    "tiger-growl-only": build_tiger_growl_only,
    "mm": build_mm,
    "uav": build_uav,
}

_CACHE: dict[str, Domain] = {}


def get_domain(name_or_path: str) -> Domain:
    """Built-in domain by name, or a domain file by path."""
    if name_or_path in BUILTIN_DOMAINS:
        if name_or_path not in _CACHE:
            _CACHE[name_or_path] = BUILTIN_DOMAINS[name_or_path]()
        return _CACHE[name_or_path]
    try:
        with open(name_or_path, encoding="utf-8") as fh:
            return load_domain(fh.read())
    except FileNotFoundError:
        known = ", ".join(BUILTIN_DOMAINS)
        raise ConfigError(f"unknown domain {name_or_path!r} (built-ins: {known})") from None


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_LIST_SECTIONS = {
    "states": None,
    "actions i": "i",
    "actions j": "j",
    "observations i": "i",
    "observations j": "j",
}
_TABLE_SECTIONS = ("transition", "observation i", "observation j", "reward i", "reward j")
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def parse_value(token: str) -> float:
    """Parse a number or a left-to-right chain of ``*`` and ``/``."""
    parts = re.split(r"([*/])", token)
    if any(not _NUMBER.match(p) for p in parts[::2]):
        raise ValueError(f"bad number {token!r}")
    value = float(parts[0])
    for op, operand in zip(parts[1::2], parts[2::2]):
        value = value * float(operand) if op == "*" else value / float(operand)
    return value


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def load_domain(text: str) -> Domain:
    name = "custom"
    labels: dict[str, list[str]] = {}
    rows: dict[str, list[tuple[int, list[str]]]] = {t: [] for t in _TABLE_SECTIONS}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise DomainError("unterminated section header", line=lineno)
            section = " ".join(line[1:-1].split())
            if section not in _LIST_SECTIONS and section not in _TABLE_SECTIONS and section != "name":
                raise DomainError(f"unknown section [{section}]", line=lineno)
            continue
        if section is None:
            raise DomainError("content before the first section header", line=lineno)
        if section == "name":
            name = line
        elif section in _LIST_SECTIONS:
            labels.setdefault(section, []).extend(line.split())
        else:
            rows[section].append((lineno, line.split()))

    for sec in _LIST_SECTIONS:
        if not labels.get(sec):
            raise DomainError(f"missing or empty [{sec}] section")
        if len(set(labels[sec])) != len(labels[sec]):
            raise DomainError(f"duplicate labels in [{sec}]")
        if "*" in labels[sec]:
            raise DomainError(f"'*' is reserved and cannot be a label in [{sec}]")

    states = labels["states"]
    acts = {k: labels[f"actions {k}"] for k in AGENTS}
    obs = {k: labels[f"observations {k}"] for k in AGENTS}
    Ai, Aj, S = len(acts["i"]), len(acts["j"]), len(states)

    def fill(table: str, width: int) -> np.ndarray:
        out = np.full((Ai, Aj, S, width), np.nan)
        rank = np.full((Ai, Aj, S), -1)
        for order, (lineno, tokens) in enumerate(rows[table]):
            if len(tokens) < 3:
                raise DomainError("row needs a_i, a_j and state columns", line=lineno)
            key, values = tokens[:3], tokens[3:]
            if len(values) != width:
                raise DomainError(
                    f"arity error: expected {width} values, found {len(values)}",
                    line=lineno,
                    key=" ".join(key),
                )
            try:
                vec = [parse_value(v) for v in values]
            except ValueError as exc:
                raise DomainError(str(exc), line=lineno, key=" ".join(key)) from None
            index = []
            for tok, pool, what in zip(key, (acts["i"], acts["j"], states), ("action", "action", "state")):
                if tok == "*":
                    index.append(range(len(pool)))
                elif tok in pool:
                    index.append([pool.index(tok)])
                else:
                    raise DomainError(f"unknown {what} {tok!r}", line=lineno, key=" ".join(key))
            specificity = sum(tok != "*" for tok in key)
            for ai, aj, s in itertools.product(*index):
                if specificity >= rank[ai, aj, s]:
                    out[ai, aj, s] = vec
                    rank[ai, aj, s] = specificity
        return out

    T = fill("transition", S)
    O = {k: fill(f"observation {k}", len(obs[k])) for k in AGENTS}
    R = {k: fill(f"reward {k}", 1)[..., 0] for k in AGENTS}
    domain = Domain(
        name=name, states=states, actions=acts, observations=obs,
        transition=T, obsfn=O, reward=R,
    )
    report = validate_domain(domain)
    if report:
        first = report[0]
        more = f" (and {len(report) - 1} more)" if len(report) > 1 else ""
        raise DomainError(
            f"{first.table}: {first.constraint}{more}", key=" ".join(map(str, first.key))
        )
    return domain


def dump_domain(d: Domain) -> str:
    """Canonical text form: every row explicit, values written repr-exact."""
    out = ["[name]", d.name, "[states]", " ".join(d.states)]
    for k in AGENTS:
        out += [f"[actions {k}]", " ".join(d.actions[k])]
    for k in AGENTS:
        out += [f"[observations {k}]", " ".join(d.observations[k])]

    def table(title, arr, header):
        out.append(f"[{title}]")
        out.append("# a_i a_j state " + " ".join(header))
        for ai, a in enumerate(d.actions["i"]):
            for aj, b in enumerate(d.actions["j"]):
                for s, lab in enumerate(d.states):
                    vals = np.atleast_1d(arr[ai, aj, s])
                    out.append(" ".join([a, b, lab] + [repr(float(v)) for v in vals]))

    table("transition", d.transition, d.states)
    for k in AGENTS:
        table(f"observation {k}", d.obsfn[k], d.observations[k])
    for k in AGENTS:
        table(f"reward {k}", d.reward[k], ["reward"])
    return "\n".join(out) + "\n"
