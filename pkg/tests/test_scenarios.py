import numpy as np
import pytest

from septraj.hilbert import basis_state, qubits
from septraj.master_eq import integrate
from septraj.measures import negativity, overlap
from septraj.model import LindbladModel
from septraj.scenarios import (SCENARIOS, bell_decay_density, bell_decay_model,
                               cascade_populations, check_separable_form,
                               cnot_mixture_target, cnot_model,
                               cnot_overlap_analytic, get_scenario,
                               local_sum_project, operator_product_factors,
                               product_decay_model, swap_analytic_full,
                               swap_model, swap_operator)

# negativity of the Bell-decay state at selected times, from the closed-form
# density matrix (rates 9, 1, 1, 9)
NEGATIVITY_SAMPLES = {
    0.2: 0.18349303712161635,
    0.5: 0.15589199596526795,
    1.0: 0.04955994203802511,
}


def test_cascade_populations_match_integration():
    model = product_decay_model()
    rho0 = np.outer(basis_state((1, 1), qubits(2)),
                    basis_state((1, 1), qubits(2)).conj())
    times, states = integrate(model, rho0, t_final=1.0, dt=1e-3)
    top, p10, p01, ground = cascade_populations(1.0, 9.0, 1.0, 1.0, 9.0)
    final = states[-1]
    assert abs(final[3, 3].real - top) < 1e-8
    assert abs(final[2, 2].real - p10) < 1e-8
    assert abs(final[1, 1].real - p01) < 1e-8
    assert abs(final[0, 0].real - ground) < 1e-8
    with pytest.raises(ValueError, match="degenerate"):
        cascade_populations(1.0, 1.0, 2.0, 1.0, 9.0)


def test_bell_decay_density_matches_integration_and_negativity():
    model = bell_decay_model()
    rho0 = np.outer(basis_state((1, 1), qubits(2)),
                    basis_state((1, 1), qubits(2)).conj())
    for t, expected_neg in NEGATIVITY_SAMPLES.items():
        closed = bell_decay_density(t)
        _, states = integrate(model, rho0, t_final=t, dt=1e-3)
        assert np.max(np.abs(states[-1] - closed)) < 1e-8
        assert abs(negativity(closed, 0, qubits(2)) - expected_neg) < 1e-12


def test_cnot_overlap_analytic_matches_integration():
    shape = qubits(2)
    model = cnot_model()
    plus0 = (basis_state((0, 0), shape) + basis_state((1, 0), shape)) / np.sqrt(2)
    target = model.lindblads[0] @ plus0
    rho0 = np.outer(plus0, plus0.conj())
    times, states = integrate(model, rho0, t_final=4.0, dt=1e-3)
    got = overlap(states[-1], target)
    assert abs(got - cnot_overlap_analytic(4.0, plus0)) < 1e-8
    # the late-time limit from |+0> is 5/8
    assert abs(cnot_overlap_analytic(40.0, plus0) - 0.625) < 1e-12
    # and the attractor density has that overlap exactly
    attractor = cnot_mixture_target(plus0)
    assert abs(overlap(attractor, target) - 0.625) < 1e-12
    # from |10> the limit is 1/2 with c0 = 0
    ten = basis_state((1, 0), shape)
    assert abs(cnot_overlap_analytic(40.0, ten) - 0.5) < 1e-12


def test_swap_analytic_full_solves_master_equation():
    model = swap_model(gamma=0.7)
    rho0 = np.kron(np.diag([0.8, 0.2]), np.diag([0.3, 0.7])).astype(complex)
    _, states = integrate(model, rho0, t_final=0.9, dt=1e-3)
    closed = swap_analytic_full(0.9, rho0, gamma=0.7)
    assert np.max(np.abs(states[-1] - closed)) < 1e-8
    v = swap_operator(2)
    assert np.allclose(v @ v, np.eye(4))


def test_local_sum_projection():
    shape = qubits(2)
    rng = np.random.default_rng(60)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    local = np.kron(a, np.eye(2)) + np.kron(np.eye(2), b)
    proj, resid = local_sum_project(local, shape)
    assert resid < 1e-12
    assert np.max(np.abs(proj - local)) < 1e-10
    # a product of nontrivial projectors is not a local sum
    n_n = np.kron(np.diag([0.0, 1.0]), np.diag([0.0, 1.0]))
    _, resid = local_sum_project(n_n, shape)
    assert resid > 0.1


def test_operator_product_factorization():
    shape = qubits(2)
    rng = np.random.default_rng(61)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    factors, resid = operator_product_factors(np.kron(a, b), shape)
    assert factors is not None and resid < 1e-12
    assert np.allclose(np.kron(factors[0], factors[1]), np.kron(a, b))
    gate = cnot_model().lindblads[0]
    factors, resid = operator_product_factors(gate, shape)
    assert factors is None and resid > 0.1


def test_check_separable_form_verdicts():
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    local = LindbladModel(
        shape=qubits(2), hamiltonian=np.kron(np.diag([0.0, 1.0]), np.eye(2)),
        lindblads=[np.kron(lower, np.eye(2)), np.kron(np.eye(2), lower)])
    report = check_separable_form(local)
    assert report.verdict == "manifestly_separable" and report.manifest
    assert report.hamiltonian_residual < 1e-12
    assert all(r < 1e-12 for r in report.jump_residuals)
    # the balanced product cascade is manifestly separable: every jump is
    # product and the rate balance (9+1) - 1 - 9 = 0 makes the jump-square
    # sum an exact local sum
    assert check_separable_form(product_decay_model()).manifest
    # entangling scenarios are flagged, as is an unbalanced product cascade
    # whose jump-square sum picks up a genuine two-party term
    unbalanced = product_decay_model(gamma_up_10=5.0)
    report = check_separable_form(unbalanced)
    assert not report.manifest
    assert all(r < 1e-12 for r in report.jump_residuals)
    assert report.jump_square_residual > 0.1
    for model in (bell_decay_model(), cnot_model(), swap_model(),
                  product_decay_model(gamma_up_10=9.0, gamma_up_01=9.0,
                                      rotated=True)):
        assert not check_separable_form(model).manifest


def test_registry_and_setup_construction():
    assert sorted(SCENARIOS) == ["bell-decay", "cnot", "product-decay",
                                 "product-decay-rotated", "swap"]
    for name, scenario in SCENARIOS.items():
        setup = scenario.make()
        assert setup.model.shape.parties == 2
        assert setup.observables
        names = [o.name for o in setup.observables]
        assert len(names) == len(set(names))
        assert {"dt", "t_final", "n_traj"} <= set(setup.defaults)
    with pytest.raises(KeyError, match="unknown scenario"):
        get_scenario("does-not-exist")
    # parameter overrides flow through to the model
    setup = get_scenario("swap").make(gamma=2.5)
    assert abs(setup.model.rates["gamma"] - 2.5) < 1e-15
    with pytest.raises(ValueError):
        get_scenario("cnot").make(initial="entangled")


def test_rotated_variant_requires_equal_upper_rates():
    with pytest.raises(ValueError, match="equal upper rates"):
        product_decay_model(gamma_up_10=9.0, gamma_up_01=1.0, rotated=True)
    # the rotation leaves the unrestricted generator unchanged
    from septraj.master_eq import lindblad_rhs
    rng = np.random.default_rng(62)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    base = product_decay_model(gamma_up_10=9.0, gamma_up_01=9.0)
    rot = product_decay_model(gamma_up_10=9.0, gamma_up_01=9.0, rotated=True)
    dev = np.max(np.abs(lindblad_rhs(base, rho) - lindblad_rhs(rot, rho)))
    assert dev < 1e-12
