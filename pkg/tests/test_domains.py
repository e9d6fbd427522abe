import numpy as np
import pytest

from nestplan import build_mm, build_tiger, build_tiger_growl_only, build_uav, dump_domain, get_domain, load_domain
from nestplan.domains import UavConfig, uav_location, uav_state
from nestplan.errors import ConfigError, DomainError
from nestplan.model import validate_domain

# ---------------------------------------------------------------------------
# tiger table entries: (a_i, a_j, state, expected)
# ---------------------------------------------------------------------------

TIGER_T = [
    ("OL", "L", "TL", (0.5, 0.5)),
    ("OL", "OR", "TR", (0.5, 0.5)),
    ("OR", "L", "TL", (0.5, 0.5)),
    ("L", "OL", "TL", (0.5, 0.5)),
    ("L", "OR", "TR", (0.5, 0.5)),
    ("L", "L", "TL", (1.0, 0.0)),
    ("L", "L", "TR", (0.0, 1.0)),
]

TIGER_R_I = [
    ("OR", "OR", (10, -100)), ("OL", "OL", (-100, 10)), ("OR", "OL", (10, -100)),
    ("OL", "OR", (-100, 10)), ("L", "L", (-1, -1)), ("L", "OR", (-1, -1)),
    ("OR", "L", (10, -100)), ("L", "OL", (-1, -1)), ("OL", "L", (-100, 10)),
]
TIGER_R_J = [
    ("OR", "OR", (10, -100)), ("OL", "OL", (-100, 10)), ("OR", "OL", (-100, 10)),
    ("OL", "OR", (10, -100)), ("L", "L", (-1, -1)), ("L", "OR", (10, -100)),
    ("OR", "L", (-1, -1)), ("L", "OL", (-100, 10)), ("OL", "L", (-1, -1)),
]

OBS = ("GL,CL", "GL,CR", "GL,S", "GR,CL", "GR,CR", "GR,S")
TIGER_O_I = [
    ("L", "L", "TL", (0.85 * 0.05, 0.85 * 0.05, 0.85 * 0.9, 0.15 * 0.05, 0.15 * 0.05, 0.15 * 0.9)),
    ("L", "L", "TR", (0.15 * 0.05, 0.15 * 0.05, 0.15 * 0.9, 0.85 * 0.05, 0.85 * 0.05, 0.85 * 0.9)),
    ("L", "OL", "TL", (0.85 * 0.9, 0.85 * 0.05, 0.85 * 0.05, 0.15 * 0.9, 0.15 * 0.05, 0.15 * 0.05)),
    ("L", "OL", "TR", (0.15 * 0.9, 0.15 * 0.05, 0.15 * 0.05, 0.85 * 0.9, 0.85 * 0.05, 0.85 * 0.05)),
    ("L", "OR", "TL", (0.85 * 0.05, 0.85 * 0.9, 0.85 * 0.05, 0.15 * 0.05, 0.15 * 0.9, 0.15 * 0.05)),
    ("L", "OR", "TR", (0.15 * 0.05, 0.15 * 0.9, 0.15 * 0.05, 0.85 * 0.05, 0.85 * 0.9, 0.85 * 0.05)),
    ("OL", "L", "TL", (1 / 6,) * 6),
    ("OR", "OR", "TR", (1 / 6,) * 6),
]
TIGER_O_J = [
    ("L", "L", "TL", (0.85 * 0.05, 0.85 * 0.05, 0.85 * 0.9, 0.15 * 0.05, 0.15 * 0.05, 0.15 * 0.9)),
    ("OL", "L", "TL", (0.85 * 0.9, 0.85 * 0.05, 0.85 * 0.05, 0.15 * 0.9, 0.15 * 0.05, 0.15 * 0.05)),
    ("OL", "L", "TR", (0.15 * 0.9, 0.15 * 0.05, 0.15 * 0.05, 0.85 * 0.9, 0.85 * 0.05, 0.85 * 0.05)),
    ("OR", "L", "TL", (0.85 * 0.05, 0.85 * 0.9, 0.85 * 0.05, 0.15 * 0.05, 0.15 * 0.9, 0.15 * 0.05)),
    ("OR", "L", "TR", (0.15 * 0.05, 0.15 * 0.9, 0.15 * 0.05, 0.85 * 0.05, 0.85 * 0.9, 0.85 * 0.05)),
    ("L", "OL", "TR", (1 / 6,) * 6),
    ("OR", "OR", "TL", (1 / 6,) * 6),
]


def _idx(d, ai, aj, s=None):
    out = (d.action_index("i", ai), d.action_index("j", aj))
    return out + ((d.state_index(s),) if s is not None else ())


@pytest.mark.parametrize("ai,aj,s,row", TIGER_T)
def test_tiger_transition_entries(tiger, ai, aj, s, row):
    assert np.allclose(tiger.transition[_idx(tiger, ai, aj, s)], row, atol=1e-12)


@pytest.mark.parametrize("agent,table", [("i", TIGER_R_I), ("j", TIGER_R_J)])
def test_tiger_reward_entries(tiger, agent, table):
    assert len(table) == 9
    for ai, aj, (tl, tr) in table:
        got = tiger.reward[agent][_idx(tiger, ai, aj)]
        assert tuple(got) == (tl, tr), (agent, ai, aj)


@pytest.mark.parametrize("agent,table", [("i", TIGER_O_I), ("j", TIGER_O_J)])
def test_tiger_observation_entries(tiger, agent, table):
    assert tiger.observations[agent] == OBS
    for ai, aj, s, row in table:
        got = tiger.obsfn[agent][_idx(tiger, ai, aj, s)]
        assert np.allclose(got, row, atol=1e-12), (agent, ai, aj, s)


def test_tiger_named_examples(tiger):
    assert tiger.obsfn["i"][_idx(tiger, "L", "L", "TL")][OBS.index("GL,S")] == pytest.approx(0.765)
    assert tiger.reward["i"][_idx(tiger, "OR", "OL", "TL")] == 10
    assert tiger.transition[_idx(tiger, "L", "L", "TL")][0] == 1.0


def test_tiger_rows_sum_and_role_symmetry(tiger):
    for k in ("i", "j"):
        assert np.allclose(tiger.obsfn[k].sum(-1), 1.0, atol=1e-6)
    # j's reward is i's with the roles swapped
    assert np.array_equal(tiger.reward["j"], tiger.reward["i"].transpose(1, 0, 2))
    assert np.array_equal(tiger.obsfn["j"], tiger.obsfn["i"].transpose(1, 0, 2, 3))


def test_growl_only_observations(tiger_g):
    ll = _idx(tiger_g, "L", "L", "TL")
    assert tiger_g.observations["j"] == ("GL", "GR")
    assert tiger_g.obsfn["j"][ll][0] == pytest.approx(0.85)
    assert tiger_g.obsfn["j"][ll][1] == pytest.approx(0.15)
    assert np.allclose(tiger_g.obsfn["j"].sum(-1), 1.0)
    assert np.array_equal(tiger_g.obsfn["i"], build_tiger().obsfn["i"])


# ---------------------------------------------------------------------------
# machine maintenance
# ---------------------------------------------------------------------------

DEGRADE = ((0.81, 0.18, 0.01), (0.0, 0.9, 0.1), (0.0, 0.0, 1.0))
RESET = ((1.0, 0.0, 0.0), (0.95, 0.05, 0.0), (0.95, 0.0, 0.05))
MM_STATES = ("0-fail", "1-fail", "2-fail")

MM_T = [(ai, aj, DEGRADE) for ai in "ME" for aj in "ME"] + [
    ("M", "I", RESET), ("M", "R", RESET), ("E", "I", RESET), ("E", "R", RESET),
    ("I", "M", RESET), ("R", "E", RESET), ("I", "I", RESET), ("R", "R", RESET),
]

# i's table: (a_i, a_j, state, P(not-defective))
MM_O_I = [
    ("M", "M", "0-fail", 0.5), ("M", "E", "2-fail", 0.5),
    ("M", "I", "1-fail", 0.95), ("M", "R", "2-fail", 0.95),
    ("E", "M", "0-fail", 0.75), ("E", "M", "1-fail", 0.5), ("E", "E", "2-fail", 0.25),
    ("E", "I", "0-fail", 0.95), ("E", "R", "2-fail", 0.95),
    ("I", "M", "0-fail", 0.95), ("R", "E", "1-fail", 0.95), ("I", "I", "2-fail", 0.95),
]
MM_O_J = [
    ("M", "M", "1-fail", 0.5), ("E", "M", "2-fail", 0.5),
    ("I", "M", "0-fail", 0.95), ("R", "M", "1-fail", 0.95),
    ("M", "E", "0-fail", 0.75), ("E", "E", "1-fail", 0.5), ("M", "E", "2-fail", 0.25),
    ("I", "E", "2-fail", 0.95), ("M", "I", "0-fail", 0.95), ("E", "R", "1-fail", 0.95),
]

MM_R = {
    ("M", "M"): (1.805, 0.95, 0.5), ("M", "E"): (1.555, 0.7, 0.25),
    ("M", "I"): (0.4025, -1.025, -2.25), ("M", "R"): (-1.0975, -1.525, -1.75),
    ("E", "E"): (1.305, 0.45, 0.0), ("E", "I"): (0.1525, -1.275, -2.5),
    ("E", "R"): (-1.3475, -1.775, -2.0), ("I", "M"): (0.4025, -1.025, -2.25),
    ("I", "E"): (0.1525, -1.275, -2.5), ("I", "I"): (-1.0, -3.0, -5.0),
    ("I", "R"): (-2.5, -3.5, -4.5), ("R", "M"): (-1.0975, -1.525, -1.75),
    ("R", "E"): (-1.3475, -1.775, -2.0), ("R", "I"): (-2.5, -3.5, -4.5),
    ("R", "R"): (-4.0, -4.0, -4.0),
}


@pytest.mark.parametrize("ai,aj,rows", MM_T)
def test_mm_transition_entries(mm, ai, aj, rows):
    assert np.allclose(mm.transition[_idx(mm, ai, aj)], rows, atol=1e-12)


@pytest.mark.parametrize("agent,table", [("i", MM_O_I), ("j", MM_O_J)])
def test_mm_observation_entries(mm, agent, table):
    for ai, aj, s, p in table:
        row = mm.obsfn[agent][_idx(mm, ai, aj, s)]
        assert row == pytest.approx((p, 1 - p), abs=1e-12), (agent, ai, aj, s)


@pytest.mark.parametrize("agent", ["i", "j"])
def test_mm_reward_entries(mm, agent):
    for (ai, aj), vals in MM_R.items():
        assert tuple(mm.reward[agent][_idx(mm, ai, aj)]) == vals, (agent, ai, aj)


def test_mm_em_entry_kept_per_agent(mm):
    # the printed tables differ in one digit at <E,M> 0-fail
    assert mm.reward["i"][_idx(mm, "E", "M", "0-fail")] == 1.5555
    assert mm.reward["j"][_idx(mm, "E", "M", "0-fail")] == 1.555


def test_mm_named_examples(mm):
    assert mm.transition[_idx(mm, "M", "M", "0-fail")][0] == 0.81
    assert mm.reward["i"][_idx(mm, "M", "M", "0-fail")] == 1.805
    assert mm.obsfn["i"][_idx(mm, "E", "M", "1-fail")][0] == 0.5


def test_mm_expanded_shape_and_merged_rows(mm):
    assert mm.transition.shape == (4, 4, 3, 3)
    # inspect and repair by either agent give the same transition rows
    for a in ("I", "R"):
        for b in "MEIR":
            assert np.array_equal(mm.transition[_idx(mm, a, b)], mm.transition[_idx(mm, b, a)])


# ---------------------------------------------------------------------------
# UAV
# ---------------------------------------------------------------------------


def test_uav_counts(uav):
    assert uav.n_states == 36
    assert uav.n_actions("i") == 5 and uav.n_actions("j") == 5
    assert uav.n_obs("i") == 3


def test_uav_move_north_advances_row(uav):
    a = uav.action_index("i", "move_N")
    lis = uav.action_index("j", "listen")
    for row in (1, 2):
        for col in (0, 1):
            s = uav_state(uav_location(row, col), uav_location(0, 0 if (row, col) != (1, 0) else 1))
            if uav.absorbing[s]:
                continue
            s_next = np.flatnonzero(uav.transition[a, lis, s])
            assert len(s_next) == 1
            assert uav.states[s_next[0]].split("/")[0].split("-")[0] == ("top", "center")[row - 1]


def test_uav_movement_stays_on_lattice(uav):
    assert np.allclose(uav.transition.sum(-1), 1.0)
    assert uav.transition.shape == (5, 5, 36, 36)


def test_uav_absorbing_states(uav):
    co = [s for s, lab in enumerate(uav.states) if lab.split("/")[0] == lab.split("/")[1]]
    assert len(co) == 6
    assert np.array_equal(np.flatnonzero(uav.absorbing), co)
    for s in co:
        assert np.all(uav.transition[:, :, s, s] == 1.0)
        assert np.all(uav.reward["i"][:, :, s] == 0.0)


def test_uav_observation_accuracy():
    d = build_uav(UavConfig(obs_accuracy=0.7))
    lis = d.action_index("i", "listen")
    for s, lab in enumerate(d.states):
        row = ("top", "center", "bottom").index(lab.split("/")[1].split("-")[0])
        assert d.obsfn["i"][lis, 0, s, row] == pytest.approx(0.7)


def test_uav_bad_config():
    with pytest.raises(ConfigError):
        build_uav(UavConfig(obs_accuracy=1.5))


# ---------------------------------------------------------------------------
# validation, loader, registry
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["tiger", "tiger-growl-only", "mm", "uav"])
def test_builtins_validate_and_are_pure(name):
    d = get_domain(name)
    assert validate_domain(d) == []
    assert validate_domain(d) == []
    assert get_domain(name) == d


@pytest.mark.parametrize("build", [build_tiger, build_tiger_growl_only, build_mm, build_uav])
def test_round_trip(build):
    d = build()
    assert load_domain(dump_domain(d)) == d


TINY = """\
[states]
A B
[actions i]
x
[actions j]
y
[observations i]
o p
[observations j]
q
[transition]
* * * 0.5 0.5
[observation i]
* * * 1/2 1/2
[observation j]
* * * 1
[reward i]
* * * 0
[reward j]
* * * 0
"""


def test_wildcards_and_override():
    d = load_domain(TINY.replace("* * * 0.5 0.5", "* * * 0.5 0.5\nx y B 0 1"))
    assert np.array_equal(d.transition[0, 0], [[0.5, 0.5], [0.0, 1.0]])


def test_arity_error_names_line():
    with pytest.raises(DomainError, match="line"):
        load_domain(TINY.replace("* * * 1/2 1/2", "* * * 0.25 0.25 0.25 0.25"))


def test_row_sum_error_names_row():
    with pytest.raises(DomainError) as exc:
        load_domain(TINY.replace("* * * 0.5 0.5", "* * * 0.5 0.49"))
    assert "transition" in str(exc.value)


def test_missing_row_is_reported():
    with pytest.raises(DomainError):
        load_domain(TINY.replace("[transition]\n* * * 0.5 0.5\n", "[transition]\n"))
