"""Continuous-time jump unravellings: stochastic state-vector steps and
their density-operator (von Neumann) companions.

One uniform variate drives each step.  The unit interval is partitioned
into one sub-interval per jump channel (length = dt * rate, laid out in
channel order) with the remainder assigned to the deterministic drift, so
increments obey dN_a dN_b = delta_ab dN_a exactly and at most one jump
fires per step.  The density-operator steps conjugate by the very same
one-step operator the state-vector step applied, so that under a shared
generator both unravellings agree projector-for-projector step by step.
"""

from dataclasses import dataclass, field

import numpy as np

from .hilbert import tensor_product
from .mcwf import norm_sq, normalized
from .model import effective_hamiltonian
from .sep_mcwf import ProductState, partially_reduce, sep_branch_table


@dataclass
class JumpIncrement:
    """Which channel fired this step (channel = -1 for none)."""

    channel: int
    dn: np.ndarray
    counters: dict = field(default_factory=dict)


def _pick_channel(probs, rng):
    """Partition [0, 1) into channel intervals + drift remainder; draw once."""
    total = float(sum(probs))
    if total >= 1.0:
        raise ValueError("dt too large: jump probabilities exceed one")
    u = rng.random()
    acc = 0.0
    for a, p in enumerate(probs):
        acc += p
        if u < acc:
            return a
    return -1


def sse_step(model, psi, dt, rng):
    """One jump-unravelling step for the unrestricted dynamics."""
    m = model.n_jumps
    jumped = [L @ psi for L in model.lindblads]
    probs = [dt * norm_sq(v) for v in jumped]
    a = _pick_channel(probs, rng)
    dn = np.zeros(m, dtype=int)
    if a >= 0:
        dn[a] = 1
        return normalized(jumped[a]), JumpIncrement(channel=a, dn=dn)
    drift = psi - 1j * dt * (effective_hamiltonian(model) @ psi)
    return normalized(drift), JumpIncrement(channel=-1, dn=dn)


def svn_step(model, sigma, dt, rng):
    """Density-operator twin of sse_step: conjugation by the same operator.

    For sigma = |psi><psi| and a shared generator this reproduces the
    sse_step projector exactly, jump for jump.
    """
    m = model.n_jumps
    probs = [dt * float(np.trace(L.conj().T @ L @ sigma).real)
             for L in model.lindblads]
    a = _pick_channel(probs, rng)
    dn = np.zeros(m, dtype=int)
    if a >= 0:
        dn[a] = 1
        M = model.lindblads[a]
    else:
        M = np.eye(model.dim, dtype=complex) - 1j * dt * effective_hamiltonian(model)
    out = M @ sigma @ M.conj().T
    tr = float(np.trace(out).real)
    if tr <= 1e-300:
        raise RuntimeError("conjugation annihilated the state")
    return out / tr, JumpIncrement(channel=a, dn=dn)


def _sep_drift_factors(model, state, dt):
    heff = effective_hamiltonian(model)
    return [normalized(psi - 1j * dt * (partially_reduce(heff, state, k) @ psi))
            for k, psi in enumerate(state.factors)]


def sep_sse_step(model, state, dt, rng):
    """One restricted jump-unravelling step on an explicit product state.

    Channel rates come from the restricted branch table; channels without a
    product form (frozen groups) have rate zero, so they never fire, and
    their suppression is reported through the increment counters.
    """
    table = sep_branch_table(model.lindblads, state)
    m = len(model.lindblads)
    probs = [dt * w for w in table.weights]
    a = _pick_channel(probs, rng)
    dn = np.zeros(m, dtype=int)
    if a >= 0:
        dn[a] = 1
        return (ProductState(table.outputs[a], state.shape),
                JumpIncrement(channel=a, dn=dn, counters=table.counters))
    return (ProductState(_sep_drift_factors(model, state, dt), state.shape),
            JumpIncrement(channel=-1, dn=dn, counters=table.counters))


def sep_svn_step(model, state, dt, rng):
    """Density-operator twin of sep_sse_step.

    Returns (new product state, new sigma, increment).  Regular jumps and
    the drift act by conjugation with the reduced product operator; remixed
    singular jumps project directly onto their product output, which is the
    same map on product sigma.
    """
    shape = state.shape
    n = shape.parties
    table = sep_branch_table(model.lindblads, state)
    m = len(model.lindblads)
    probs = [dt * w for w in table.weights]
    a = _pick_channel(probs, rng)
    dn = np.zeros(m, dtype=int)
    full = state.full()
    sigma = np.outer(full, full.conj()) / norm_sq(full)
    if a >= 0:
        dn[a] = 1
        new_state = ProductState(table.outputs[a], shape)
        br = table.branches[a]
        if br is not None and br.regular and not br.vanished:
            M = br.effective_operator(shape)
            out = M @ sigma @ M.conj().T
            out = out / float(np.trace(out).real)
        else:
            v = new_state.full()
            out = np.outer(v, v.conj())
        return (new_state, out,
                JumpIncrement(channel=a, dn=dn, counters=table.counters))
    factors = _sep_drift_factors(model, state, dt)
    heff = effective_hamiltonian(model)
    blocks = [np.eye(d, dtype=complex) - 1j * dt * partially_reduce(heff, state, k)
              for k, d in enumerate(shape.local_dims)]
    M = tensor_product(blocks) if n > 1 else blocks[0]
    out = M @ sigma @ M.conj().T
    out = out / float(np.trace(out).real)
    return (ProductState(factors, shape), out,
            JumpIncrement(channel=-1, dn=dn, counters=table.counters))


class SseStepper:
    """Adapter feeding sse_step into the shared ensemble runner."""

    def __init__(self, model, dt, psi0):
        self.model = model
        self.dt = dt
        self.psi0 = normalized(np.asarray(psi0, dtype=complex))

    def initial(self):
        return self.psi0

    def step(self, psi, rng):
        psi, _ = sse_step(self.model, psi, self.dt, rng)
        return psi, None

    def density(self, psi):
        return np.outer(psi, psi.conj())


class SepSseStepper:
    """Adapter feeding sep_sse_step into the shared ensemble runner."""

    def __init__(self, model, dt, state0):
        self.model = model
        self.dt = dt
        self.state0 = state0.normalized()

    def initial(self):
        return self.state0

    def step(self, state, rng):
        state, inc = sep_sse_step(self.model, state, self.dt, rng)
        return state, inc.counters

    def density(self, state):
        full = state.full()
        return np.outer(full, full.conj())
