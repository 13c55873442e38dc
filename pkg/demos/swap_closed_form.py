#
# The swap model (single jump operator sqrt(g) V, V the exchange
# unitary) can be solved in closed form on both sides of the library.
# Unrestricted: rho(t) = e^{-gt}(cosh(gt) rho0 + sinh(gt) V rho0 V).
# Restricted, from a product state: a two-member ensemble whose weights
# follow an exact binomial recursion, (1 +- (1 - 2 g tau)^s)/2.  This
# script checks the integrator and the deterministic piecewise
# propagator against both formulas.
#

import numpy as np

from septraj.hilbert import SystemShape, basis_state, qubits
from septraj.master_eq import SeparableEnsemble, integrate, sep_piecewise_propagate
from septraj.scenarios import (swap_analytic_full,
                               swap_analytic_restricted_weights, swap_model)
from septraj.sep_mcwf import ProductState


def run():
    gamma = 1.0
    tau = 1e-3
    steps = 1000      # so gamma * t = 1

    model = swap_model(gamma=gamma)
    shape = qubits(2)
    rho0 = np.outer(basis_state((0, 1), shape),
                    basis_state((0, 1), shape).conj())

    _, states = integrate(model, rho0, t_final=steps * tau, dt=tau)
    dev = np.max(np.abs(states[-1] - swap_analytic_full(steps * tau, rho0,
                                                        gamma)))
    print("rk4 vs closed form at gt=1: max entry deviation %.2e" % dev)

    one = SystemShape((2,))
    state0 = ProductState([basis_state((0,), one), basis_state((1,), one)],
                          model.shape)
    history, _ = sep_piecewise_propagate(
        model, SeparableEnsemble.pure(state0), tau, steps)
    w = sorted(history[-1].weights, reverse=True)
    w_stay, w_swap = swap_analytic_restricted_weights(steps, tau, gamma)
    print("piecewise weights after %d steps: %.6f / %.6f" % (steps, *w))
    print("binomial closed form:            %.6f / %.6f" % (w_stay, w_swap))
    print("continuum limit (1 +- e^{-2})/2: %.6f / %.6f"
          % ((1 + np.exp(-2)) / 2, (1 - np.exp(-2)) / 2))

    # at matched discretization the two restricted/unrestricted series
    # are the same recursion, so they agree to machine precision
    _, euler = integrate(model, rho0, steps * tau, tau, method="euler")
    series = np.array([e.density() for e in history])
    print("restricted vs unrestricted (euler, same tau): max dev %.2e"
          % np.max(np.abs(series - euler)))


if __name__ == "__main__":
    run()
