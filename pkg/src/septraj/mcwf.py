"""Monte Carlo wave-function unravelling of the unrestricted dynamics.

Each step applies the one-step Kraus set: branch b is selected with
probability proportional to ||K^b psi||^2 and the state is renormalized.
Exactly one uniform variate is consumed per step, with branch intervals
ordered by branch index; the restricted sampler follows the same discipline
so that single-party systems reproduce these trajectories sample for sample.
"""

from dataclasses import dataclass

import numpy as np

from .ensemble import run_ensemble as _run_ensemble
from .model import build_kraus


def norm_sq(v):
    return float(np.vdot(v, v).real)


def normalized(v):
    n2 = norm_sq(v)
    if n2 <= 1e-300:
        raise ValueError("cannot normalize a (numerically) zero vector")
    return v / np.sqrt(n2)


@dataclass
class BranchDistribution:
    """Normalized branch outputs with their squared-norm weights."""

    states: list
    weights: list

    @property
    def total(self):
        return float(sum(self.weights))


def branch_states(kraus, psi):
    """All one-step branch outputs K^b psi, normalized, with weights ||K^b psi||^2."""
    states, weights = [], []
    for K in kraus.operators:
        phi = K @ psi
        w = norm_sq(phi)
        weights.append(w)
        states.append(phi / np.sqrt(w) if w > 1e-300 else phi)
    return BranchDistribution(states=states, weights=weights)


def select_branch(weights, rng):
    """Draw one branch index from interval lengths proportional to weights.

    Consumes exactly one uniform; intervals are laid out in index order.
    """
    total = float(sum(weights))
    if total <= 1e-300:
        raise ValueError("all branch weights vanish")
    u = rng.random() * total
    acc = 0.0
    for b, w in enumerate(weights):
        acc += w
        if u < acc:
            return b
    return len(weights) - 1


def mcwf_step(kraus, psi, rng):
    """One stochastic step; returns (new state, selected branch index)."""
    phis = [K @ psi for K in kraus.operators]
    weights = [norm_sq(phi) for phi in phis]
    b = select_branch(weights, rng)
    return normalized(phis[b]), b


def run_trajectory(kraus, psi, n_steps, rng):
    """Propagate one trajectory, returning states at every step (incl. t=0)."""
    states = [psi]
    jumps = []
    for step in range(n_steps):
        psi, b = mcwf_step(kraus, psi, rng)
        states.append(psi)
        if b > 0:
            jumps.append((step, b))
    return states, jumps


class McwfStepper:
    """Adapter feeding mcwf_step into the shared ensemble runner."""

    def __init__(self, model, tau, psi0):
        self.kraus = build_kraus(model, tau)
        self.psi0 = np.asarray(psi0, dtype=complex)

    def initial(self):
        return self.psi0

    def step(self, psi, rng):
        psi, _ = mcwf_step(self.kraus, psi, rng)
        return psi, None

    def density(self, psi):
        return np.outer(psi, psi.conj())


def run_ensemble(model, psi0, tau, n_steps, n_traj, master_seed, observables,
                 threads=1):
    """Ensemble of unrestricted trajectories; see ensemble.run_ensemble."""
    stepper = McwfStepper(model, tau, normalized(np.asarray(psi0, dtype=complex)))
    return _run_ensemble(stepper, tau, n_steps, n_traj, master_seed, observables,
                         threads=threads)
