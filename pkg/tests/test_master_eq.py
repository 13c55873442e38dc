import numpy as np
import pytest

from septraj.hilbert import SystemShape, basis_ket, qubits
from septraj.master_eq import (SeparableEnsemble, integrate, lindblad_rhs,
                               sep_generator, sep_piecewise_propagate)
from septraj.mcwf import normalized
from septraj.model import LindbladModel
from septraj.scenarios import (bell_decay_model, swap_analytic_full,
                               swap_analytic_restricted_weights, swap_model)
from septraj.sep_mcwf import ProductState

# frozen limits of the restricted swap weights: e^-1 cosh 1 and e^-1 sinh 1
STAY_LIMIT = 0.5676676416183063
SWAP_LIMIT = 0.43233235838169365


def _rand_density(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def _rand_vec(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def test_rhs_preserves_trace_and_hermiticity():
    rng = np.random.default_rng(40)
    model = bell_decay_model()
    rho = _rand_density(rng, 4)
    out = lindblad_rhs(model, rho)
    assert abs(np.trace(out)) < 1e-12
    assert np.max(np.abs(out - out.conj().T)) < 1e-12


def test_integrate_reproduces_closed_form_swap():
    model = swap_model(gamma=1.0)
    rho0 = np.kron(np.diag([1.0, 0.0]), np.diag([0.6, 0.4])).astype(complex)
    times, states = integrate(model, rho0, t_final=0.5, dt=1e-3)
    assert abs(times[-1] - 0.5) < 1e-12
    expect = swap_analytic_full(0.5, rho0)
    assert np.max(np.abs(states[-1] - expect)) < 1e-8


def test_euler_is_first_order_rk4_much_better():
    model = swap_model(gamma=1.0)
    rho0 = np.kron(np.diag([1.0, 0.0]), np.diag([0.6, 0.4])).astype(complex)
    expect = swap_analytic_full(0.2, rho0)
    _, s_euler = integrate(model, rho0, 0.2, 1e-2, method="euler")
    _, s_rk4 = integrate(model, rho0, 0.2, 1e-2, method="rk4")
    err_euler = np.max(np.abs(s_euler[-1] - expect))
    err_rk4 = np.max(np.abs(s_rk4[-1] - expect))
    assert err_rk4 < 1e-9
    assert err_euler > 100 * err_rk4
    with pytest.raises(ValueError):
        integrate(model, rho0, 0.2, 1e-2, method="midpoint")


def test_sep_generator_is_traceless_and_collapses_at_one_party():
    rng = np.random.default_rng(41)
    model = bell_decay_model()
    state = ProductState([_rand_vec(rng, 2), _rand_vec(rng, 2)], model.shape)
    gen = sep_generator(model, state)
    assert abs(np.trace(gen.drift)) < 1e-12
    # single party: restricted generator equals the unrestricted one
    h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    model1 = LindbladModel(shape=SystemShape((3,)),
                           hamiltonian=(h + h.conj().T) / 2,
                           lindblads=[rng.normal(size=(3, 3))
                                      + 1j * rng.normal(size=(3, 3))])
    psi = _rand_vec(rng, 3)
    state1 = ProductState([psi], model1.shape)
    gen1 = sep_generator(model1, state1)
    rho1 = np.outer(psi, psi.conj())
    assert np.max(np.abs(gen1.drift - lindblad_rhs(model1, rho1))) < 1e-12


def test_sep_generator_matches_unrestricted_on_local_model():
    """Local Hamiltonians and strictly local jumps never entangle, and the
    restricted generator reproduces the unrestricted one exactly."""
    rng = np.random.default_rng(42)
    shape = qubits(2)
    h_local = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h_local = (h_local + h_local.conj().T) / 2
    ham = np.kron(h_local, np.eye(2)) + np.kron(np.eye(2), h_local)
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    model = LindbladModel(shape=shape, hamiltonian=ham,
                          lindblads=[np.kron(lower, np.eye(2)),
                                     np.kron(np.eye(2), lower)])
    for _ in range(5):
        state = ProductState([_rand_vec(rng, 2), _rand_vec(rng, 2)], shape)
        rho = np.outer(state.full(), state.full().conj())
        gen = sep_generator(model, state)
        dev = np.max(np.abs(gen.drift - lindblad_rhs(model, rho)))
        assert dev < 1e-12


def test_separable_ensemble_density():
    shape = qubits(2)
    a = ProductState([basis_ket(0, 2), basis_ket(0, 2)], shape)
    b = ProductState([basis_ket(1, 2), basis_ket(1, 2)], shape)
    ens = SeparableEnsemble(members=[a, b], weights=[0.25, 0.75])
    assert abs(ens.total - 1.0) < 1e-15
    rho = ens.density()
    assert abs(rho[0, 0] - 0.25) < 1e-15 and abs(rho[3, 3] - 0.75) < 1e-15
    pure = SeparableEnsemble.pure(a)
    assert len(pure.members) == 1 and pure.weights[0] == 1.0


def test_piecewise_swap_weights_are_binomial():
    """After s steps the two members carry weights (1 +/- (1-2 gamma tau)^s)/2."""
    model = swap_model(gamma=1.0)
    shape = model.shape
    state0 = ProductState([basis_ket(0, 2), normalized(np.ones(2))], shape)
    tau, s = 1e-3, 200
    history, counters = sep_piecewise_propagate(
        model, SeparableEnsemble.pure(state0), tau, s)
    final = history[-1]
    assert len(final.members) == 2
    assert abs(final.total - 1.0) < 1e-12
    w_stay, w_swap = swap_analytic_restricted_weights(s, tau)
    got = sorted(final.weights, reverse=True)
    assert abs(got[0] - w_stay) < 1e-12
    assert abs(got[1] - w_swap) < 1e-12


def test_piecewise_swap_weights_approach_frozen_limits():
    w_stay, w_swap = swap_analytic_restricted_weights(1000, 1e-3)
    assert abs(w_stay - STAY_LIMIT) < 2e-3
    assert abs(w_swap - SWAP_LIMIT) < 2e-3


def test_piecewise_conserves_weight_with_pruning():
    model = bell_decay_model()
    state0 = ProductState([np.array([1, 0], complex), np.array([0, 1], complex)],
                          model.shape)
    history, counters = sep_piecewise_propagate(
        model, SeparableEnsemble.pure(state0), 0.01, 50)
    for ens in history:
        assert abs(ens.total - 1.0) < 1e-10


def test_piecewise_rejects_overlong_step():
    model = swap_model(gamma=1.0)
    state0 = ProductState([basis_ket(0, 2), basis_ket(1, 2)], model.shape)
    with pytest.raises(RuntimeError, match="tau too large"):
        sep_piecewise_propagate(model, SeparableEnsemble.pure(state0), 1.5, 1)


def test_piecewise_member_cap_resamples_deterministically():
    model = bell_decay_model()
    rng = np.random.default_rng(43)
    state0 = ProductState([_rand_vec(rng, 2), _rand_vec(rng, 2)], model.shape)
    a, _ = sep_piecewise_propagate(model, SeparableEnsemble.pure(state0),
                                   0.01, 30, max_members=4)
    b, _ = sep_piecewise_propagate(model, SeparableEnsemble.pure(state0),
                                   0.01, 30, max_members=4)
    assert all(len(e.members) <= 4 for e in a)
    for ea, eb in zip(a, b):
        assert np.allclose(ea.weights, eb.weights)
        for ma, mb in zip(ea.members, eb.members):
            assert np.allclose(ma.full(), mb.full())


def test_trace_guard_catches_divergence():
    model = swap_model(gamma=1.0)
    rho0 = np.kron(np.diag([1.0, 0.0]), np.diag([0.6, 0.4])).astype(complex)
    with pytest.raises(RuntimeError, match="trace"):
        bad = LindbladModel(shape=model.shape, hamiltonian=model.hamiltonian,
                            lindblads=model.lindblads)
        integrate(bad, rho0, 10.0, 1.0, method="euler",
                  rhs=lambda r: r)  # pathological growth
