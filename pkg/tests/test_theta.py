import numpy as np
import pytest

from thetarho import charkit, goepel, riemann, theta
from thetarho.charkit import Characteristic, PartitionChar, char_of_partition
from thetarho.errors import DomainError, VerificationError


def _random_tau(g, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(g, g))
    x = rng.normal(size=(g, g))
    return (x + x.T) / 2 + 1j * (a @ a.T + g * np.eye(g) * 0.5)


@pytest.mark.parametrize("g", [1, 2, 3])
def test_parity_symmetry(g):
    tau = _random_tau(g, g)
    v = np.random.default_rng(7).normal(size=g) * 0.3
    for c in charkit.all_characteristics(g):
        plus = theta.theta_char(c, v, tau)
        minus = theta.theta_char(c, -v, tau)
        sign = -1 if c.is_odd else 1
        assert abs(minus - sign * plus) < 1e-12 * max(1, abs(plus))
        if c.is_odd:
            assert abs(theta.theta_char(c, np.zeros(g), tau)) < 1e-13


def test_derivatives_against_finite_differences():
    tau = _random_tau(2, 3)
    c = Characteristic.parse("10/11")
    v = np.array([0.1, -0.2])
    h = 1e-5
    ev = theta.ThetaEvaluator(tau)
    grad = ev.gradient(c, v)
    for k in range(2):
        dv = np.zeros(2)
        dv[k] = h
        fd = (ev.value(c, v + dv) - ev.value(c, v - dv)) / (2 * h)
        assert abs(fd - grad[k]) < 1e-7 * max(1, abs(grad[k]))
    hess = ev.hessian(c, v)
    assert theta.theta_char(c, v, tau, (0, 1)) == pytest.approx(hess[0, 1], rel=1e-12)
    assert theta.theta_char(c, v, tau, (1,)) == pytest.approx(grad[1], rel=1e-12)


def test_truncation_soundness(period_data):
    _, pd = period_data(3)
    base = theta.ThetaEvaluator(pd.tau, tol=1e-15)
    wider = theta.ThetaEvaluator(pd.tau, tol=1e-15, radius=base.radius + 2)
    for c in charkit.all_characteristics(3):
        assert abs(base.value(c) - wider.value(c)) < 1e-14
    assert base.radius == theta.truncation_radius(pd.tau, 1e-15)[0]


def test_indefinite_tau_rejected():
    with pytest.raises(DomainError):
        theta.ThetaEvaluator(np.array([[1j, 0], [0, -1j]]))
    with pytest.raises(DomainError):
        theta.theta_char(Characteristic.zero(2), np.zeros(2), _random_tau(2, 0), (0, 1, 1))
    with pytest.raises(DomainError):
        theta.ThetaEvaluator(np.array([[1j, 0.5], [0.2, 1j]]))


def test_genus3_singular_constant(period_data):
    _, pd = period_data(3)
    k = char_of_partition(PartitionChar.of(3, ()))
    ev = theta.evaluator(pd.tau)
    assert abs(ev.value(k)) < 1e-13
    assert np.abs(ev.hessian(k)).max() > 1e-2


@pytest.mark.parametrize("g", [2, 3])
def test_heat_equation(g, period_data):
    _, pd = period_data(g)
    v = np.linspace(-0.2, 0.3, g)
    for c in charkit.all_characteristics(g):
        assert theta.heat_check(c, pd.tau)["pass"]
        assert theta.heat_check(c, pd.tau, v)["pass"]


def test_heat_convention_oracle(period_data):
    _, pd = period_data(2)
    rep = theta.heat_convention_check(Characteristic.zero(2), pd.tau)
    assert rep["chosen"] == "independent"
    assert rep["conventions"]["independent"]["fd_vs_series"] < 1e-8
    assert rep["conventions"]["symmetric"]["heat_residual"] > 1e-3
    with pytest.raises(DomainError):
        theta.heat_convention_check(Characteristic.parse("10/10"), pd.tau)


@pytest.mark.parametrize("g,order,expected", [(2, 1, 1), (2, 2, -1), (3, 1, 1), (3, 2, -1), (3, 3, -1)])
def test_thomae(g, order, expected, period_data):
    curve, pd = period_data(g)
    rep = theta.verify_thomae(curve, order, pd=pd)
    assert rep["pass"] and rep["eps_constant"]
    assert abs(rep["eps"] - expected) < 1e-10
    assert rep["max_residual"] < 1e-10


def test_thomae_other_curve():
    curve = riemann.HyperellipticCurve((-3, -1, 0, 2, 5, 6, 9, 13))
    for order, expected in ((1, 1), (2, -1), (3, -1)):
        rep = theta.verify_thomae(curve, order)
        assert rep["pass"] and abs(rep["eps"] - expected) < 1e-9


def test_thomae_high_precision():
    curve = riemann.default_curve(2)
    pd = riemann.periods(curve, digits=30)
    rep = theta.verify_thomae(curve, 1, digits=30, pd=pd, tol=1e-25)
    assert rep["max_residual"] < 1e-25 and rep["max_eighth_dev"] < 1e-25


def test_thomae_input_checks(period_data):
    curve, pd = period_data(2)
    with pytest.raises(DomainError):
        theta.verify_thomae(curve, 4, pd=pd)
    with pytest.raises(DomainError):
        theta.verify_thomae(curve, 3, pd=pd)
    with pytest.raises(DomainError):
        theta.verify_thomae(curve, 1, chars=[PartitionChar.of(2, {0})], pd=pd)
    with pytest.raises(DomainError):
        theta.verify_thomae(curve, 1, digits=30, pd=pd)


def test_thomae_failure_names_worst(period_data, monkeypatch):
    curve, pd = period_data(2)
    real = theta.image_value
    monkeypatch.setattr(theta, "image_value", lambda img, c, p, high=False: 1.1 * real(img, c, p, high))
    with pytest.raises(VerificationError) as exc:
        theta.verify_thomae(curve, 1, pd=pd)
    assert "partition" in exc.value.witness


@pytest.mark.parametrize("g,count", [(3, 1), (4, 10)])
def test_vanishing_census(g, count, period_data):
    curve, pd = period_data(g)
    rep = theta.vanishing_census(curve, pd=pd)
    assert rep["count"] == count and rep["matches_singular"]
    assert rep["min_nonvanishing_rel"] > 1e-3


def test_vanishing_generic_tau_is_empty():
    tau = _random_tau(3, 11)
    ev = theta.evaluator(tau)
    vals = [abs(ev.value(c)) for c in charkit.all_characteristics(3) if c.is_even]
    assert min(vals) > 1e-6 * max(vals)


@pytest.mark.parametrize("target", ["lemma_I2", "theorem_chi_monomial"])
def test_transformations_genus3(target, period_data):
    curve, pd = period_data(3)
    reps = theta.generator_sweep(curve, target, pd=pd)
    assert all(r["pass"] for r in reps)
    assert reps[0]["multipliers"] == [1]


def test_transform_unknown_target(period_data):
    curve, pd = period_data(3)
    with pytest.raises(DomainError):
        theta.transform_check(charkit.j_element(3), curve, "nope", pd=pd)


def test_transform_detects_wrong_characteristic(period_data, monkeypatch):
    curve, pd = period_data(3)
    monkeypatch.setattr(theta, "gamma_action", lambda gamma, c: c)
    rep = theta.transform_check(charkit.j_element(3), curve, "theorem_chi_monomial", pd=pd, strict=False)
    assert not rep["pass"]


def test_chi_forms(period_data):
    curve, pd = period_data(3)
    r18 = theta.chi_forms(curve, "chi18", pd=pd)
    r4 = theta.chi_forms(curve, "chi4", pd=pd)
    assert r18["max_residual"] < 1e-6
    assert r4["variants"] == 30 and r4["mutual_spread"] < 1e-8
    curve4, pd4 = period_data(4)
    assert theta.chi_forms(curve4, "chi68-partial", pd=pd4)["singular"] == 10
    with pytest.raises(DomainError):
        theta.chi_forms(curve4, "chi18", pd=pd4)
    with pytest.raises(DomainError):
        theta.chi_forms(curve, "chi68-partial", pd=pd)
    with pytest.raises(DomainError):
        theta.chi_forms(curve, "chi5", pd=pd)


def test_chi4_systems_cover_all_singular():
    assert len(goepel.singular_systems(3, 3)) == 30
