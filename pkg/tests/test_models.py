"""Variance models: finite-width laws, declared limits, and the convergence
checker."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy import stats as st

from levynet import levy
from levynet.models import (MODEL_NAMES, check_id_conditions, gen_bfry_density,
                            make_model, measure_from_spec, model_from_spec,
                            sample_variances)
from levynet.rng import RngStream
from levynet.stats import ks_distance


def test_model_names_all_buildable():
    built = {
        "deterministic": {},
        "bernoulli": {"c": 2.0},
        "group_lasso_gamma": {},
        "inverse_gamma": {},
        "inverse_gamma_stable": {"alpha": 0.5},
        "beta": {"eta": 1.0, "b": 0.5},
        "horseshoe": {"c": 1.0},
        "regularized_horseshoe": {"c": 2.0},
        "generalized_bfry": {"eta": 4.0, "alpha": 0.5, "tau": 5.0},
        "spike_slab": {"c": 1.0, "slab": {"kind": "point_mass", "loc": 1.0}},
        "perman_generic": {"measure": {"name": "gamma",
                                       "params": {"eta": 1.0, "rate": 1.0}}},
    }
    assert set(built) == set(MODEL_NAMES)
    for name, params in built.items():
        m = make_model(name, **params)
        draws = m.sample(50, RngStream(1, 0), p_next=3)
        assert draws.shape == (1, 50) and np.all(draws >= 0)


def test_model_spec_roundtrip():
    m = make_model("generalized_bfry", eta=4.0, alpha=0.5, tau=5.0)
    again = model_from_spec(m.to_dict())
    assert again.params == m.params and again.name == m.name


def test_measure_from_spec():
    m = measure_from_spec({"name": "stable", "params": {"alpha": 0.5, "c": 2.0}})
    assert m.name == "stable" and m.params["c"] == 2.0
    with pytest.raises(ValueError):
        measure_from_spec({"name": "nope"})


def test_deterministic_and_bernoulli_exact_laws():
    det = make_model("deterministic", c1=3.0)
    assert np.all(sample_variances(det, 6, RngStream(2, 0)) == 0.5)
    bern = make_model("bernoulli", c=2.0)
    draws = bern.sample(100, RngStream(3, 0), n=2000)
    counts = draws.sum(axis=1)
    # counts ~ Binomial(100, 0.02), mean 2
    assert abs(counts.mean() - 2.0) < 4 * math.sqrt(2.0 * 0.98 / 2000)
    assert set(np.unique(draws)) <= {0.0, 1.0}


def test_finite_width_marginals():
    p = 40
    ig = make_model("inverse_gamma").sample(p, RngStream(4, 0), n=500).ravel()
    assert ks_distance(ig, st.invgamma(2.0, scale=2.0 / p).cdf) < 0.02
    beta = make_model("beta", eta=1.0, b=0.5).sample(p, RngStream(5, 0),
                                                     n=500).ravel()
    assert ks_distance(beta, st.beta(1.0 / p, 0.5).cdf) < 0.02
    hs = make_model("horseshoe", c=1.0).sample(p, RngStream(6, 0),
                                               n=500).ravel()
    # lambda = (pi u / (2 p))^2 for half-Cauchy u
    assert ks_distance(hs, lambda x: st.halfcauchy().cdf(
        2.0 * p * np.sqrt(x) / math.pi)) < 0.02


def test_group_lasso_needs_p_next():
    m = make_model("group_lasso_gamma")
    with pytest.raises(ValueError):
        m.sample(10, RngStream(7, 0))
    draws = m.sample(2000, RngStream(7, 0), p_next=1, n=200)
    # E[sum_j lambda_j] = c1 exactly at every width
    assert abs(draws.sum(axis=1).mean() - 1.0) < 0.01


def test_gen_bfry_density_normalizes_and_matches_histogram():
    eta, alpha, tau, p = 4.0, 0.5, 5.0, 100
    total, _ = integrate.quad(lambda x: gen_bfry_density(x, p, eta, alpha, tau),
                              0.0, math.inf, epsabs=1e-10, epsrel=1e-10,
                              limit=400)
    assert abs(total - 1.0) < 1e-6
    m = make_model("generalized_bfry", eta=eta, alpha=alpha, tau=tau)
    draws = m.sample(p, RngStream(8, 0), n=400).ravel()

    grid = np.geomspace(1e-12, draws.max() * 2, 4001)
    dens = gen_bfry_density(grid, p, eta, alpha, tau)
    cdf_grid = np.concatenate([[0.0], np.cumsum(
        0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    assert ks_distance(draws, lambda x: np.interp(x, grid, cdf_grid)) < 0.012


def test_spike_slab_point_mass_atoms_exact():
    m = make_model("spike_slab", c=2.0, c_tilde=0.0,
                   slab={"kind": "point_mass", "loc": 3.0})
    draws = m.sample(200, RngStream(9, 0), n=1000)
    vals = np.unique(draws)
    assert set(vals) <= {0.0, 3.0}
    hits = (draws == 3.0).sum(axis=1)
    assert abs(hits.mean() - 2.0) < 4 * math.sqrt(2.0 / 1000)
    assert m.limit.measure.kind == "atomic"
    assert m.limit.measure.atoms == ((3.0, 2.0),)


def test_spike_slab_gamma_slab_tail():
    m = make_model("spike_slab", c=1.5, slab={"kind": "gamma",
                                              "shape": 2.0, "rate": 1.0})
    assert abs(m.limit.measure.total_mass() - 1.5) < 1e-9
    assert abs(levy.tail_intensity(m.limit.measure, 1.0)
               - 1.5 * st.gamma(2.0).sf(1.0)) < 1e-9


def test_perman_generic_matches_gamma_limit():
    # the width-p law mu_p(du) = (1 - e^{-u psi^{-1}(p)}) rho(du) / p; check
    # sum_j lambda_j converges to Gamma(eta, rate) in distribution
    m = make_model("perman_generic",
                   measure={"name": "gamma", "params": {"eta": 1.0, "rate": 1.0}})
    draws = m.sample(300, RngStream(10, 0), n=3000)
    sums = draws.sum(axis=1)
    assert ks_distance(sums, st.gamma(1.0).cdf) < 0.035


@pytest.mark.parametrize("spec", [
    ("deterministic", {"c1": 1.0}),
    ("bernoulli", {"c": 2.0}),
    ("inverse_gamma", {}),
    ("inverse_gamma_stable", {"alpha": 0.5}),
    ("beta", {"eta": 1.0, "b": 0.5}),
    ("horseshoe", {"c": 1.0}),
    ("regularized_horseshoe", {"c": 2.0}),
    ("generalized_bfry", {"eta": 4.0, "alpha": 0.5, "tau": 5.0}),
])
def test_id_conditions_per_model(spec):
    name, params = spec
    model = make_model(name, **params)
    report = check_id_conditions(model, [3000], [0.5, 2.0], [1.0],
                                 replicates=120, rng=RngStream(11, 0),
                                 p_next=1)
    failed = [c.label for c in report.checks if not c.passed]
    assert not failed, f"{name}: {failed}"


def test_validation_errors():
    with pytest.raises(ValueError):
        make_model("deterministic", c1=-1.0)
    with pytest.raises(ValueError):
        make_model("generalized_bfry", eta=1.0, alpha=1.2, tau=5.0)
    with pytest.raises(ValueError):
        make_model("horseshoe", c=0.0)
    with pytest.raises(ValueError):
        make_model("unknown_model")
    bern = make_model("bernoulli", c=5.0)
    with pytest.raises(ValueError):
        bern.sample(3, RngStream(1, 0))
