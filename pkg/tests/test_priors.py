import numpy as np
import pytest

from nestplan.errors import PriorError
from nestplan.priors import BUILTIN_PRIORS, default_prior, get_prior, load_prior
from nestplan.model import PiecewiseConstant, sample_initial_particles

PRIOR_FILE = """\
[prior]
level = 1
domain = tiger
agent = i
gamma = 0.9
horizon = 2

[states]
TL 0.3
TR 0.7

[frames]
f0 0.9 2 1.0

[density TL f0]
uniform
[density TR f0]
piecewise 0,0.5,1 0.4,1.6
"""


@pytest.mark.parametrize("name", sorted(BUILTIN_PRIORS))
def test_builtin_priors_sample(name):
    prior = get_prior(name, horizon=1)
    ps = sample_initial_particles(prior, 20, 0, nested_sizes=[3, 3])
    assert len(ps) == 20 and ps.level == prior.level


def test_default_prior_registry():
    assert default_prior("tiger", 2).level == 2
    assert default_prior("mm", 1).frame.domain.name == "mm"


def test_load_prior_file():
    prior = load_prior(PRIOR_FILE)
    assert np.allclose(prior.state_marginal, [0.3, 0.7])
    assert prior.frame.horizon == 2 and prior.other_frames[0].agent == "j"
    assert isinstance(prior.densities[(1, 0)], PiecewiseConstant)


def test_load_prior_rejects_bad_marginal():
    with pytest.raises(PriorError):
        load_prior(PRIOR_FILE.replace("TR 0.7", "TR 0.8"))


def test_level2_prior_file(tmp_path):
    text = "[prior]\nlevel = 2\ndomain = tiger\nagent = i\n\n[components]\n0.25 tiger-fig3a\n0.75 tiger-fig3b\n"
    prior = load_prior(text)
    assert np.allclose(prior.component_weights, [0.25, 0.75])
    assert all(c.frame.agent == "j" for _, c in prior.components)
