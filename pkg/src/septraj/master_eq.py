"""Deterministic propagation: the unrestricted Lindblad equation and the
separability-restricted generator with its piecewise ensemble propagator.

The restricted generator at a product state rho = |Psi><Psi| is the tau -> 0
limit of the restricted branch map,

    drho/dt = D0 + sum_a r_a (Pi_a - rho),

with D0 the reduced no-jump drift and r_a, Pi_a the branch rates and output
projectors from the same reduction (including remixed singular groups;
frozen groups contribute nothing).  Mixed separable states are propagated as
explicit weighted ensembles of product states with tau-linear branch
weights, which keeps weight bookkeeping exact order by order.
"""

from dataclasses import dataclass, field

import numpy as np

from .hilbert import embed_local, partial_trace
from .mcwf import norm_sq, normalized
from .model import effective_hamiltonian, sum_jump_products
from .sep_mcwf import (ProductState, mean_value, partially_reduce,
                       sep_branch_table)


def lindblad_rhs(model, rho):
    """drho/dt = i[rho, H] + sum_a (L rho L+ - (1/2){L+L, rho})."""
    H = model.hamiltonian
    out = 1j * (rho @ H - H @ rho)
    for L in model.lindblads:
        LdL = L.conj().T @ L
        out += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def integrate(model, rho0, t_final, dt, method="rk4", rhs=None):
    """Fixed-step integration of drho/dt = rhs(rho); returns (times, states).

    rhs defaults to the unrestricted Lindblad right-hand side.  The trace is
    monitored every step as a cheap sanity guard on the step size.
    """
    if rhs is None:
        f = lambda r: lindblad_rhs(model, r)
    else:
        f = rhs
    if dt <= 0 or t_final < 0:
        raise ValueError("need dt > 0 and t_final >= 0")
    n_steps = int(round(t_final / dt))
    rho = np.asarray(rho0, dtype=complex).copy()
    states = [rho.copy()]
    for _ in range(n_steps):
        if method == "euler":
            rho = rho + dt * f(rho)
        elif method == "rk4":
            k1 = f(rho)
            k2 = f(rho + 0.5 * dt * k1)
            k3 = f(rho + 0.5 * dt * k2)
            k4 = f(rho + dt * k3)
            rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        else:
            raise ValueError(f"unknown method {method!r}")
        if abs(np.trace(rho).real - 1.0) > 1e-6:
            raise RuntimeError("trace drifted; reduce dt")
        states.append(rho.copy())
    return np.arange(n_steps + 1) * dt, np.stack(states)


@dataclass
class GeneratorOutput:
    """Restricted drift at one product state, with its pieces."""

    drift: np.ndarray
    no_jump: np.ndarray
    rates: list
    projectors: list
    counters: dict = field(default_factory=dict)


def _local_sum_embedding(op, state):
    """sum_k embed((op)_k): the sum of all single-party reductions, embedded."""
    shape = state.shape
    out = np.zeros((shape.total_dim, shape.total_dim), dtype=complex)
    for k in range(shape.parties):
        out += embed_local(partially_reduce(op, state, k), k, shape)
    return out


def sep_generator(model, state):
    """Exact time derivative of the restricted dynamics at a product state."""
    state = state.normalized()
    shape = state.shape
    n = shape.parties
    full = state.full()
    rho = np.outer(full, full.conj())
    A = sum_jump_products(model)
    H_sum = _local_sum_embedding(model.hamiltonian, state)
    A_sum = _local_sum_embedding(A, state)
    a_mean = mean_value(A, state).real
    d0 = (1j * (rho @ H_sum - H_sum @ rho)
          - 0.5 * (A_sum @ rho + rho @ A_sum)
          + n * a_mean * rho)
    table = sep_branch_table(model.lindblads, state)
    rates, projectors = [], []
    drift = d0.copy()
    for w, out in zip(table.weights, table.outputs):
        if out is None or w <= 0.0:
            rates.append(0.0)
            projectors.append(None)
            continue
        v = out[0] if n == 1 else np.asarray(
            ProductState(out, shape).full())
        pi = np.outer(v, v.conj())
        rates.append(float(w))
        projectors.append(pi)
        drift += w * (pi - rho)
    return GeneratorOutput(drift=drift, no_jump=d0, rates=rates,
                           projectors=projectors, counters=table.counters)


@dataclass
class SeparableEnsemble:
    """Weighted ensemble of explicit product states."""

    members: list
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.members) != self.weights.size:
            raise ValueError("one weight per member required")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")

    @property
    def total(self):
        return float(self.weights.sum())

    def density(self):
        dim = self.members[0].shape.total_dim
        rho = np.zeros((dim, dim), dtype=complex)
        for w, st in zip(self.weights, self.members):
            full = st.full()
            rho += w * np.outer(full, full.conj())
        return rho

    @classmethod
    def pure(cls, state):
        return cls(members=[state.normalized()], weights=np.array([1.0]))


def _state_key(state):
    rounded = [np.round(f / np.exp(1j * np.angle(f[np.argmax(np.abs(f))])), 9)
               for f in state.factors]
    return b"".join(r.tobytes() for r in rounded)


def _merge_and_order(members, weights, merge_tol):
    """Coalesce members equal up to per-factor phase and fidelity merge_tol,
    then order by descending weight (state bytes as tiebreak)."""
    kept = []
    for st, w in zip(members, weights):
        hit = None
        for entry in kept:
            other = entry[0]
            same = True
            for f, g in zip(st.factors, other.factors):
                fid = abs(np.vdot(f, g)) ** 2 / (norm_sq(f) * norm_sq(g))
                if fid < 1.0 - merge_tol:
                    same = False
                    break
            if same:
                hit = entry
                break
        if hit is None:
            kept.append([st, w])
        else:
            hit[1] += w
    kept.sort(key=lambda e: (-e[1], _state_key(e[0])))
    return [e[0] for e in kept], np.array([e[1] for e in kept])


def sep_piecewise_propagate(model, ensemble, tau, n_steps, prune_tol=1e-8,
                            merge_tol=1e-10, max_members=10000,
                            resample_seed=0):
    """Deterministic restricted propagation of a separable ensemble.

    Each member splits into its no-jump branch, weighted 1 - tau * (sum of
    applicable rates), and one branch per applicable jump, weighted
    tau * rate; weight is conserved exactly step by step.  Members are then
    merged (per-factor fidelity), pruned, capped (seeded resampling), and
    canonically ordered, so the propagation is fully deterministic.

    Returns (history, counters); history[s] is the ensemble after s steps.
    """
    heff = effective_hamiltonian(model)
    l_norms = [float(np.linalg.norm(L, 2)) for L in model.lindblads]
    history = [ensemble]
    counters = {}
    for _ in range(n_steps):
        new_members, new_weights = [], []
        for w, st in zip(ensemble.weights, ensemble.members):
            table = sep_branch_table(model.lindblads, st, op_norms=l_norms)
            for key, val in table.counters.items():
                counters[key] = counters.get(key, 0) + val
            total_rate = float(sum(table.weights))
            if tau * total_rate > 1.0:
                raise RuntimeError("tau too large for piecewise weights")
            nj_factors = [normalized(psi - 1j * tau
                                     * (partially_reduce(heff, st, k) @ psi))
                          for k, psi in enumerate(st.factors)]
            new_members.append(ProductState(nj_factors, st.shape))
            new_weights.append(w * (1.0 - tau * total_rate))
            for rate, out in zip(table.weights, table.outputs):
                if out is None or rate <= 0.0:
                    continue
                new_members.append(ProductState(out, st.shape))
                new_weights.append(w * tau * rate)
        members, weights = _merge_and_order(new_members, new_weights, merge_tol)
        keep = weights >= prune_tol * weights.sum()
        if not np.all(keep):
            lost = weights[~keep].sum()
            members = [m for m, k in zip(members, keep) if k]
            weights = weights[keep]
            weights = weights * (1.0 + lost / weights.sum())
        if len(members) > max_members:
            rng = np.random.default_rng(resample_seed)
            idx = rng.choice(len(members), size=max_members, replace=False,
                             p=weights / weights.sum())
            idx.sort()
            members = [members[i] for i in idx]
            weights = weights[idx]
            weights = weights * (ensemble.total / weights.sum())
            counters["resampled"] = counters.get("resampled", 0) + 1
        ensemble = SeparableEnsemble(members=members, weights=weights)
        history.append(ensemble)
    return history, counters
