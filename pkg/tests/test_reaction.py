import numpy as np
import pytest

from retreatwave import (
    InputError,
    PerturbationError,
    ReactionFunction,
    make_logistic,
    make_perturbation_pair,
    make_polynomial,
    parse_reaction,
    validate_monostable,
)


def test_logistic_values():
    f = make_logistic(1.0)
    assert f(0.5) == pytest.approx(0.25, abs=1e-15)
    assert f(1.0) == 0.0
    assert f.deriv(1.0) == -1.0
    assert f.deriv(0.0) == 1.0
    assert f.stable_zero == 1.0
    f2 = make_logistic(2.0)
    assert f2(2.0) == pytest.approx(-4.0, abs=1e-15)


def test_logistic_rejects_nonpositive_rate():
    with pytest.raises(InputError):
        make_logistic(0.0)
    with pytest.raises(InputError):
        make_logistic(-1.0)


def test_logistic_accepts_arrays():
    f = make_logistic(1.5)
    u = np.linspace(0.0, 2.0, 7)
    np.testing.assert_allclose(f(u), 1.5 * u * (1 - u), rtol=1e-15)
    np.testing.assert_allclose(f.deriv(u), 1.5 * (1 - 2 * u), rtol=1e-15)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 5.0])
def test_validate_passes_logistic_family(r):
    report = validate_monostable(make_logistic(r), grid_n=500)
    assert report.ok, report.failures


def test_validate_rejects_bistable():
    g = ReactionFunction(
        value_fn=lambda u: u * (1 - u) * (u - 0.3),
        deriv_fn=lambda u: (1 - u) * (u - 0.3) + u * (-(u - 0.3) + (1 - u)),
        stable_zero=1.0,
        label="bistable",
    )
    report = validate_monostable(g, grid_n=500)
    assert not report.ok
    assert any("sign violation in (0" in msg for msg in report.failures)


def test_validate_rejects_corrupted_derivative():
    base = make_logistic(1.0)
    g = ReactionFunction(
        value_fn=base.value_fn,
        deriv_fn=lambda u: 1.1 * base.deriv(u),
        stable_zero=1.0,
        label="corrupted",
    )
    report = validate_monostable(g, grid_n=500)
    assert not report.ok
    assert any("central difference" in msg for msg in report.failures)


def test_validate_requires_reasonable_grid():
    with pytest.raises(InputError):
        validate_monostable(make_logistic(1.0), grid_n=50)


def test_perturbation_pair_logistic_exact_family():
    f = make_logistic(1.0)
    pair = make_perturbation_pair(f, 0.1)
    u = np.linspace(0.05, 1.8, 11)
    np.testing.assert_allclose(pair.lower(u), u * (0.9 - u), atol=1e-12)
    np.testing.assert_allclose(pair.upper(u), u * (1.1 - u), atol=1e-12)
    assert pair.lower.stable_zero == pytest.approx(0.9, abs=1e-9)
    assert pair.upper.stable_zero == pytest.approx(1.1, abs=1e-9)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_pair_sandwich_on_dense_grid(eps):
    f = make_logistic(1.0)
    delta = 2.0
    pair = make_perturbation_pair(f, eps)
    u = np.linspace(0.0, 2.0 * delta, 10_001)[1:]
    assert np.all(pair.lower(u) < f(u))
    assert np.all(f(u) < pair.upper(u))
    assert pair.lower.stable_zero < 1.0 < pair.upper.stable_zero
    assert abs(pair.lower.stable_zero - 1.0) <= 1.5 * eps
    assert abs(pair.upper.stable_zero - 1.0) <= 1.5 * eps


def test_pair_c1_distance_shrinks_with_eps():
    f = make_logistic(1.0)
    delta = 2.0
    u = np.linspace(0.0, 2.0 * delta, 4001)
    dists = []
    for eps in (0.1, 0.05, 0.025):
        pair = make_perturbation_pair(f, eps)
        d0 = max(
            np.max(np.abs(pair.lower(u) - f(u))),
            np.max(np.abs(pair.upper(u) - f(u))),
        )
        d1 = max(
            np.max(np.abs(pair.lower.deriv(u) - f.deriv(u))),
            np.max(np.abs(pair.upper.deriv(u) - f.deriv(u))),
        )
        dists.append(d0 + d1)
    assert dists[0] > dists[1] > dists[2]


def test_pair_rejects_large_epsilon():
    f = make_logistic(1.0)
    with pytest.raises((InputError, PerturbationError)):
        make_perturbation_pair(f, 0.6)
    with pytest.raises(InputError):
        make_perturbation_pair(f, 0.0)


def test_pair_generic_family_on_polynomial_base():
    base = make_polynomial((1.0, -1.0))
    pair = make_perturbation_pair(base, 0.05)
    u = np.linspace(0.0, 4.0, 2001)[1:]
    assert np.all(pair.lower(u) < base(u))
    assert np.all(base(u) < pair.upper(u))
    assert pair.lower.stable_zero < 1.0 < pair.upper.stable_zero
    for member in (pair.lower, pair.upper):
        assert validate_monostable(member, grid_n=500).ok


def test_pair_members_validate(logistic1):
    pair = make_perturbation_pair(logistic1, 0.1)
    assert validate_monostable(pair.lower, grid_n=500).ok
    assert validate_monostable(pair.upper, grid_n=500).ok


def test_polynomial_rejects_bistable_coefficients():
    # u*(u - 0.3)*(1 - u) expanded: -0.3*u + 1.3*u^2 - u^3
    with pytest.raises((InputError, PerturbationError)):
        make_polynomial((-0.3, 1.3, -1.0))


def test_parse_reaction_grammar():
    assert parse_reaction("logistic").label == "logistic:r=1"
    assert parse_reaction("logistic:r=2.5")(0.5) == pytest.approx(2.5 * 0.25)
    poly = parse_reaction("custom:1,-1")
    assert poly(0.5) == pytest.approx(0.25)
    assert poly.stable_zero == pytest.approx(1.0, abs=1e-9)
    for bad in ("logistic:k=2", "logistic:r=abc", "custom:1,zz", "sine"):
        with pytest.raises(InputError):
            parse_reaction(bad)
