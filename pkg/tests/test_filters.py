import dataclasses

import numpy as np
import pytest

from nestplan import get_prior
from nestplan.analysis import kl_divergence
from nestplan.errors import InconsistentObservationError, ParticleDepletionError
from nestplan.filters import (
    GridBelief,
    Lattice,
    bin_particles,
    bootstrap_filter,
    grid_update_level1,
    ipf_propagate,
    ipf_step,
    ipf_step_sampled_obs,
    level0_update,
)
from nestplan.model import Frame, NestedPrior, ParticleSet, PointMasses, sample_initial_particles


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def level0_oracle(d, agent, b, a, o):
    """Loop-by-loop update: transition and observation each averaged over the other's actions."""
    A_oth = d.n_actions("j" if agent == "i" else "i")
    S = d.n_states

    def idx(b_oth):
        return (a, b_oth) if agent == "i" else (b_oth, a)

    post = np.zeros(S)
    for sp in range(S):
        total = 0.0
        for s in range(S):
            p_trans = sum(d.transition[idx(x) + (s, sp)] / A_oth for x in range(A_oth))
            total += p_trans * b[s]
        p_obs = sum(d.obsfn[agent][idx(x) + (sp, o)] / A_oth for x in range(A_oth))
        post[sp] = p_obs * total
    return post / post.sum()


def _zero_obs_domain(d, action="L", obs="GL,CL"):
    """tiger variant in which ``obs`` can never follow i's ``action``."""
    O = d.obsfn["i"].copy()
    ai, oi = d.action_index("i", action), d.obs_index("i", obs)
    O[ai, :, :, oi] = 0.0
    O[ai] /= O[ai].sum(-1, keepdims=True)
    return dataclasses.replace(d, obsfn={"i": O, "j": d.obsfn["j"]})


# ---------------------------------------------------------------------------
# level 0
# ---------------------------------------------------------------------------


def test_level0_worked_example(tiger_frame_i):
    b = level0_update([0.5, 0.5], "L", "GL,S", tiger_frame_i)
    assert np.allclose(b, [0.85, 0.15], atol=1e-9, rtol=0)


@pytest.mark.parametrize("o", ["GL,CL", "GL,S", "GR,CR"])
def test_level0_door_resets(tiger_frame_i, o):
    assert np.allclose(level0_update([0.9, 0.1], "OL", o, tiger_frame_i), [0.5, 0.5])


def test_level0_derived_oracle(tiger, tiger_frame_i):
    got = level0_update([0.7, 0.3], "L", "GR,S", tiger_frame_i)
    want = level0_oracle(tiger, "i", [0.7, 0.3], tiger.action_index("i", "L"), tiger.obs_index("i", "GR,S"))
    assert np.allclose(got, want, atol=1e-12)
    assert np.allclose(got, [0.1875, 0.8125], atol=1e-9)


@pytest.mark.parametrize("name", ["mm", "tiger"])
def test_level0_matches_oracle_everywhere(name):
    from nestplan import get_domain
    d = get_domain(name)
    for agent in ("i", "j"):
        fr = Frame(agent, d)
        rng = np.random.default_rng(0)
        for _ in range(10):
            b = rng.dirichlet(np.ones(d.n_states))
            a = int(rng.integers(d.n_actions(agent)))
            o = int(rng.integers(d.n_obs(agent)))
            assert np.allclose(level0_update(b, a, o, fr), level0_oracle(d, agent, b, a, o), atol=1e-12)


def test_level0_inconsistent_observation(tiger):
    fr = Frame("i", _zero_obs_domain(tiger))
    with pytest.raises(InconsistentObservationError):
        level0_update([0.5, 0.5], "L", "GL,CL", fr)


def test_uniform_preserved_by_listen_prediction(tiger):
    v = tiger.view("i")
    ll = tiger.action_index("i", "L")
    assert np.allclose(np.array([0.5, 0.5]) @ v.T_bar[ll], [0.5, 0.5])
    assert np.allclose(v.T_bar[ll].sum(0), 1.0)


# ---------------------------------------------------------------------------
# bootstrap filter
# ---------------------------------------------------------------------------


def _level0_set(frame, states):
    return ParticleSet(0, frame, np.asarray(states))


def test_bootstrap_all_tl_stays_tl(tiger_frame_i):
    # j's actions are noise here; only <L,L> keeps the tiger, so use i's frame with a L-only other agent
    d = tiger_frame_i.domain
    T = d.transition.copy()
    T[:, :] = T[d.action_index("i", "L"), d.action_index("j", "L")]
    fr = Frame("i", dataclasses.replace(d, transition=T))
    out = bootstrap_filter(_level0_set(fr, [0] * 100), "L", "GL,S", rng=0)
    assert np.all(out.states == 0) and len(out) == 100


def test_bootstrap_converges_to_exact(tiger_frame_i):
    ps = _level0_set(tiger_frame_i, np.random.default_rng(1).integers(0, 2, 5000))
    out = bootstrap_filter(ps, "L", "GL,S", rng=2)
    exact = level0_update(ps.marginal(), "L", "GL,S", tiger_frame_i)
    assert 0.83 <= out.marginal()[0] <= 0.87
    assert abs(out.marginal()[0] - exact[0]) < 0.02


def test_bootstrap_depletion(tiger):
    fr = Frame("i", _zero_obs_domain(tiger))
    with pytest.raises(ParticleDepletionError):
        bootstrap_filter(_level0_set(fr, [0] * 10), "L", "GL,CL", rng=0)


# ---------------------------------------------------------------------------
# interactive particle filter
# ---------------------------------------------------------------------------


def _fig10_input(tiger_g):
    fr = Frame("i", tiger_g, 0.9, 1)
    return ParticleSet(1, fr, np.array([0, 1]), (fr.counterpart(),), beliefs=np.full((2, 2), 0.5))


def test_ipf_worked_example_weights(tiger_g):
    ps = _fig10_input(tiger_g)
    w = ipf_propagate(ps, "L", "GL,S", 0)
    assert sorted(np.round(w.weights, 10)) == sorted([0.65025, 0.11475, 0.02025, 0.11475])
    assert w.normalized_weights @ (w.states == 0) == pytest.approx(0.85, abs=1e-9)
    # children of the TL particle carry j's updated beliefs 0.85 / 0.15
    tl = w.states == 0
    assert sorted(np.round(w.beliefs[tl, 0], 10)) == [0.15, 0.85]
    out = ipf_step(ps, "L", "GL,S", 0)
    assert len(out) == 2 and out.weights is None


def test_ipf_other_opens_door_resets_state(tiger):
    fr = Frame("i", tiger, 0.9, 1)
    ps = ParticleSet(1, fr, np.zeros(400, dtype=int), (fr.counterpart(),), beliefs=np.tile([1.0, 0.0], (400, 1)))
    w = ipf_propagate(ps, "L", "GL,S", 3)
    # j at b=(1,0) opens the right door, so s' follows the 0.5/0.5 reset row
    frac_tl = np.mean(w.states[:: tiger.n_obs("j")] == 0)
    assert abs(frac_tl - 0.5) < 3 * np.sqrt(0.25 / 400)


def test_ipf_matches_grid(tiger):
    prior = get_prior("tiger-fig3a")
    ps = ipf_step(sample_initial_particles(prior, 5000, 4), "L", "GL,S", 5)
    gb = grid_update_level1(GridBelief.from_prior(prior, 200), "L", "GL,S")
    assert tv(ps.marginal(), gb.marginal()) <= 0.05


def test_ipf_depletion(tiger):
    prior = get_prior("tiger-fig3a")
    d = _zero_obs_domain(tiger)
    fr = Frame("i", d)
    ps0 = sample_initial_particles(prior, 20, 0)
    ps = ParticleSet(1, fr, ps0.states, (fr.counterpart(),), beliefs=ps0.beliefs)
    with pytest.raises(ParticleDepletionError):
        ipf_step(ps, "L", "GL,CL", 0)


def test_sampled_variant_collapses_with_deterministic_obs(tiger):
    O = np.zeros_like(tiger.obsfn["j"])
    O[..., tiger.obs_index("j", "GL,S")] = 1.0
    d = dataclasses.replace(tiger, obsfn={"i": tiger.obsfn["i"], "j": O})
    fr = Frame("i", d)
    prior = NestedPrior(1, fr, [0.5, 0.5], (fr.counterpart(),),
                        densities={(s, 0): PointMasses(((0.5, 0.5),), (1.0,)) for s in range(2)})
    ps = sample_initial_particles(prior, 200, 0)
    a = ipf_propagate(ps, "L", "GL,S", 9, variant="enum")
    b = ipf_propagate(ps, "L", "GL,S", 9, variant="sample")
    keep = a.weights > 0
    assert np.array_equal(a.states[keep], b.states)
    assert np.allclose(a.weights[keep], b.weights)


def test_sampled_variant_close_to_enumeration():
    prior = get_prior("tiger-fig3a")
    ps = sample_initial_particles(prior, 5000, 6)
    a = ipf_step(ps, "L", "GL,S", 7)
    b = ipf_step_sampled_obs(ps, "L", "GL,S", 8)
    assert tv(a.marginal(), b.marginal()) <= 0.03


def test_sampled_variant_single_particle():
    ps = sample_initial_particles(get_prior("tiger-fig3a"), 1, 0)
    assert len(ipf_propagate(ps, "L", "GL,S", 1, variant="sample")) == 1
    assert len(ipf_step_sampled_obs(ps, "L", "GL,S", 1)) == 1


def test_structural_reduction_to_bootstrap(tiger_frame_i):
    prior = get_prior("tiger-fig3a")
    diffs = []
    for seed in range(20):
        ps = sample_initial_particles(prior, 5000, seed)
        ipf = ipf_step(ps, "L", "GL,S", 100 + seed, other_policy="uniform")
        boot = bootstrap_filter(ParticleSet(0, tiger_frame_i, ps.states), "L", "GL,S", rng=200 + seed)
        diffs.append(abs(ipf.marginal()[0] - boot.marginal()[0]))
    assert np.mean(diffs) <= 0.02


@pytest.mark.parametrize("N", [1, 7, 64])
def test_output_size_is_nominal(N):
    ps = sample_initial_particles(get_prior("tiger-fig3b"), N, N)
    assert len(ipf_step(ps, "L", "GR,S", 0)) == N


def test_ipf_deterministic():
    ps = sample_initial_particles(get_prior("tiger-fig3a"), 300, 1)
    a = ipf_step(ps, "L", "GL,S", 12)
    b = ipf_step(ps, "L", "GL,S", 12)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.beliefs, b.beliefs)


def test_ipf_level2_runs_and_keeps_structure():
    ps = sample_initial_particles(get_prior("tiger-level2"), 6, 0, nested_sizes=[6])
    out = ipf_step(ps, "L", "GL,S", 1)
    assert len(out) == 6 and out.level == 2
    assert all(m.level == 1 and len(m) == 6 for m in out.nested)


def test_mm_and_uav_filters_run():
    for name, a, o in (("mm-uniform", "M", "not-defective"), ("uav-level1", "listen", "CR")):
        ps = sample_initial_particles(get_prior(name), 100, 0)
        out = ipf_step(ps, a, o, 1)
        assert len(out) == 100 and abs(out.marginal().sum() - 1) < 1e-9


def test_kl_convergence_paired_seeds():
    prior = get_prior("tiger-fig3a")
    gb = grid_update_level1(GridBelief.from_prior(prior, 200), "L", "GL,S")
    wins = 0
    for seed in range(10):
        kl = []
        for N in (100, 2000):
            ps = ipf_step(sample_initial_particles(prior, N, 1000 * seed + N), "L", "GL,S", 7 + 1000 * seed + N)
            kl.append(kl_divergence(bin_particles(ps, gb), gb.mass))
        wins += kl[1] < kl[0]
    assert wins >= 9


# ---------------------------------------------------------------------------
# grid baseline
# ---------------------------------------------------------------------------


def test_lattice_sizes():
    assert Lattice(2, 10).size == 11
    assert Lattice(3, 4).size == 15
    idx, w = Lattice(2, 4).project(np.array([[0.3, 0.7]]))
    assert list(idx[0]) == [1, 2] and np.allclose(w[0], [0.8, 0.2])


def test_grid_worked_example_and_support(tiger):
    prior = get_prior("tiger-fig3a")
    gb0 = GridBelief.from_prior(prior, 50)
    assert gb0.mass.sum() == pytest.approx(1.0, abs=1e-9)
    gb = grid_update_level1(gb0, "L", "GL,S")
    assert gb.marginal()[0] == pytest.approx(0.85, abs=1e-9)
    # every posterior cell is a projection cell of some image SE(vertex, a_j, o_j)
    jf = prior.other_frames[0]
    allowed = set()
    for aj in range(3):
        for oj in range(6):
            B = np.array([level0_update(v, aj, oj, jf) for v in gb0.points])
            idx, w = gb0.lattice.project(B)
            allowed |= set(idx[w > 0].ravel().tolist())
    live = set(np.flatnonzero(gb.mass.sum(axis=(0, 1)) > 0).tolist())
    assert live <= allowed
    assert len(live) < gb0.lattice.size


def test_grid_door_resets(tiger):
    fr = Frame("i", tiger)
    prior = NestedPrior(1, fr, [1.0, 0.0], (fr.counterpart(),),
                        densities={(0, 0): PointMasses(((0.3, 0.7),), (1.0,))})
    gb = grid_update_level1(GridBelief.from_prior(prior, 20), "OL", "GR,CL")
    assert np.allclose(gb.marginal(), [0.5, 0.5])


def test_grid_scatter_equals_integrate():
    gb = GridBelief.from_prior(get_prior("tiger-fig3a"), 40)
    a = grid_update_level1(gb, "L", "GL,S", method="integrate")
    b = grid_update_level1(gb, "L", "GL,S", method="scatter")
    assert np.allclose(a.mass, b.mass, atol=1e-12)


def test_grid_refinement_self_consistent():
    prior = get_prior("tiger-fig3a")
    coarse = grid_update_level1(GridBelief.from_prior(prior, 100), "L", "GL,S")
    fine = grid_update_level1(GridBelief.from_prior(prior, 1000), "L", "GL,S", method="scatter")
    assert tv(coarse.mass.ravel(), fine.coarsen(100).ravel()) <= 0.02


def test_grid_three_states():
    gb = GridBelief.from_prior(get_prior("mm-uniform"), 12)
    post = grid_update_level1(gb, "M", "not-defective", method="scatter")
    assert post.mass.sum() == pytest.approx(1.0)
    assert post.mass.shape == (3, 1, Lattice(3, 12).size)
