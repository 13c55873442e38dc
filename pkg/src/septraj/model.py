"""Lindblad models and their short-time Kraus decomposition.

A model is a Hamiltonian H plus jump operators {L^a} on a fixed multipartite
shape (hbar = 1 throughout).  The one-step Kraus set is the first-order
decomposition

    K^0 = 1 - i tau Heff,   Heff = H - (i/2) sum_a L^a+ L^a,
    K^a = sqrt(tau) L^a,

which is complete up to O(tau^2).  The same evolution can be rewritten via a
gauge shift (lambda^a 1 + L^a with a compensating Hamiltonian term) and as a
perturbation of the identity, K^b = mu^b (1 + eps F^b); both forms are built
here.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .hilbert import SystemShape, is_hermitian, operator_norm


@dataclass
class LindbladModel:
    """Hamiltonian + jump operators, with optional named-rate metadata."""

    shape: SystemShape
    hamiltonian: np.ndarray
    lindblads: list
    labels: tuple = ()
    rates: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        dim = self.shape.total_dim
        H = np.asarray(self.hamiltonian, dtype=complex)
        if H.shape != (dim, dim):
            raise ValueError(f"H has shape {H.shape}, expected {(dim, dim)}")
        if not is_hermitian(H, tol=1e-10):
            raise ValueError("Hamiltonian is not Hermitian within 1e-10")
        self.hamiltonian = H
        kept, kept_labels = [], []
        labels = self.labels or tuple(f"L{a+1}" for a in range(len(self.lindblads)))
        for lab, L in zip(labels, self.lindblads):
            L = np.asarray(L, dtype=complex)
            if L.shape != (dim, dim):
                raise ValueError(f"jump operator has shape {L.shape}")
            if operator_norm(L) == 0.0:
                warnings.warn(f"dropping zero jump operator {lab}")
                continue
            kept.append(L)
            kept_labels.append(lab)
        self.lindblads = kept
        self.labels = tuple(kept_labels)

    @property
    def dim(self):
        return self.shape.total_dim

    @property
    def n_jumps(self):
        return len(self.lindblads)


def sum_jump_products(model):
    """sum_a L^a+ L^a."""
    out = np.zeros((model.dim, model.dim), dtype=complex)
    for L in model.lindblads:
        out += L.conj().T @ L
    return out


def effective_hamiltonian(model):
    """Heff = H - (i/2) sum_a L^a+ L^a (non-Hermitian for lossy models)."""
    return model.hamiltonian - 0.5j * sum_jump_products(model)


@dataclass
class KrausSet:
    """First-order Kraus operators K^0..K^m for one time step tau."""

    tau: float
    operators: list

    def __len__(self):
        return len(self.operators)


def build_kraus(model, tau):
    if tau <= 0:
        raise ValueError("tau must be positive")
    eye = np.eye(model.dim, dtype=complex)
    k0 = eye - 1j * tau * effective_hamiltonian(model)
    ops = [k0] + [np.sqrt(tau) * L for L in model.lindblads]
    return KrausSet(tau=float(tau), operators=ops)


def gauge_transform(model, lambdas):
    """Shift each jump operator by a scalar, compensating in the Hamiltonian.

    L^a -> lambda^a 1 + L^a and
    H -> H + sum_a (lambda^a* L^a - lambda^a L^a+) / (2i); the unrestricted
    Lindblad dynamics is invariant under this family.
    """
    lambdas = [complex(l) for l in lambdas]
    if len(lambdas) != model.n_jumps:
        raise ValueError(
            f"got {len(lambdas)} lambdas for {model.n_jumps} jump operators"
        )
    eye = np.eye(model.dim, dtype=complex)
    H = model.hamiltonian.copy()
    new_Ls = []
    for lam, L in zip(lambdas, model.lindblads):
        H = H + (np.conj(lam) * L - lam * L.conj().T) / 2j
        new_Ls.append(lam * eye + L)
    return LindbladModel(
        shape=model.shape,
        hamiltonian=H,
        lindblads=new_Ls,
        labels=model.labels,
        rates=dict(model.rates),
        name=model.name,
    )


@dataclass
class PerturbationForm:
    """K^b = mu^b (1 + eps F^b) with eps = tau ||G|| and normalized F^b."""

    epsilon: float
    mus: list
    fs: list
    generator: np.ndarray

    def kraus_operators(self):
        eye = np.eye(self.generator.shape[0], dtype=complex)
        return [mu * (eye + self.epsilon * F) for mu, F in zip(self.mus, self.fs)]


def _no_jump_generator(model, lambdas):
    """G = H/i - (1/2) sum_a (|lambda^a|^2 1 + 2 lambda^a* L^a + L^a+ L^a)."""
    eye = np.eye(model.dim, dtype=complex)
    G = -1j * model.hamiltonian.astype(complex)
    for lam, L in zip(lambdas, model.lindblads):
        G = G - 0.5 * (abs(lam) ** 2 * eye + 2 * np.conj(lam) * L
                       + L.conj().T @ L)
    return G


def perturbation_form(model, tau, lambdas):
    """Unified perturbation-of-the-identity form of the one-step Kraus set.

    G is the no-jump generator of the gauge-shifted model, so that
    1 + tau G equals the shifted K^0 for any choice of lambdas.  The jump
    entries are mu^a = sqrt(tau) lambda^a, F^a = L^a / ||L^a||; the
    reconstruction mu^a (1 + eps F^a) matches the shifted K^a only when the
    lambdas satisfy lambda^a = ||L^a|| / eps (see consistent_lambdas).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    lambdas = [complex(l) for l in lambdas]
    if len(lambdas) != model.n_jumps:
        raise ValueError("lambda count does not match jump operator count")
    G = _no_jump_generator(model, lambdas)
    gnorm = operator_norm(G)
    if gnorm == 0.0:
        raise ValueError("degenerate model: G = 0 (no dynamics)")
    eps = tau * gnorm
    mus = [1.0 + 0j]
    fs = [G / gnorm]
    for lam, L in zip(lambdas, model.lindblads):
        mus.append(np.sqrt(tau) * lam)
        fs.append(L / operator_norm(L))
    return PerturbationForm(epsilon=eps, mus=mus, fs=fs, generator=G)


def consistent_lambdas(model, tau):
    """Positive lambdas solving lambda^a = ||L^a|| / (tau ||G(lambda)||).

    This is the self-consistent choice under which the perturbation form
    reconstructs the gauge-shifted Kraus set exactly.  All lambdas share
    the common scale c = 1 / (tau ||G||), so the fixed point reduces to a
    scalar root find: c grows from zero while 1 / (tau ||G(c)||) falls,
    giving a bracketed crossing.
    """
    from scipy.optimize import brentq

    norms = np.array([operator_norm(L) for L in model.lindblads])
    if norms.size == 0:
        raise ValueError("model has no jump operators")

    def inv_eps(c):
        G = _no_jump_generator(model, c * norms)
        gnorm = operator_norm(G)
        if gnorm == 0.0:
            raise ValueError("degenerate model: G = 0 (no dynamics)")
        return 1.0 / (tau * gnorm)

    def gap(c):
        return c - inv_eps(c)

    hi = inv_eps(0.0)
    for _ in range(200):
        if gap(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise RuntimeError("no consistent lambda scale found")
    lo = hi * 1e-12
    while gap(lo) > 0.0:
        lo *= 1e-3
        if lo < 1e-300:
            raise RuntimeError("no consistent lambda scale found")
    c = brentq(gap, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=500)
    return list(c * norms)
