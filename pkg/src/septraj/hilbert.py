"""Tensor-structured dense linear algebra for small multipartite systems.

States are plain complex numpy vectors and operators are dense square
matrices; the composite index is row-major over the parties, so party 1 is
the most significant index (|i1 i2 ... in>).  Everything here is pure and
cheap -- the library targets desk-scale systems (total dimension capped at
DIM_CAP by default).
"""

from dataclasses import dataclass

import numpy as np

# Hard cap on the total Hilbert-space dimension for dense storage.
DIM_CAP = 4096

# Hermiticity slack after repeated products (~sqrt(machine epsilon)).
HERMITICITY_TOL = 1e-8


@dataclass(frozen=True)
class SystemShape:
    """Number of parties and local dimension of each."""

    local_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        object.__setattr__(self, "local_dims", dims)
        if len(dims) < 1:
            raise ValueError("need at least one party")
        if any(d < 2 for d in dims):
            raise ValueError("local dimensions must be >= 2")
        if self.total_dim > DIM_CAP:
            raise ValueError(
                f"total dimension {self.total_dim} exceeds cap {DIM_CAP}"
            )

    @property
    def parties(self):
        return len(self.local_dims)

    @property
    def total_dim(self):
        return int(np.prod(self.local_dims))

    @classmethod
    def uniform(cls, parties, d=2):
        return cls((d,) * parties)


def qubits(n):
    """Shape of an n-qubit register."""
    return SystemShape.uniform(n, 2)


def basis_ket(index, dim):
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def basis_state(labels, shape):
    """Computational-basis product vector, e.g. labels=(1, 1) -> |11>."""
    factors = [basis_ket(i, d) for i, d in zip(labels, shape.local_dims)]
    return tensor_product(factors)


def tensor_product(factors):
    """Kronecker product of vectors or of square operators, in party order."""
    if len(factors) == 0:
        raise ValueError("empty factor list")
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f, dtype=complex))
    if out.ndim == 2 and out.shape[0] != out.shape[1]:
        raise ValueError("operator factors must be square")
    if out.shape[0] > DIM_CAP:
        raise ValueError(f"total dimension {out.shape[0]} exceeds cap {DIM_CAP}")
    return out


def embed_local(op, party, shape):
    """1 x ... x op x ... x 1 with op acting on the given party (0-based)."""
    dims = shape.local_dims
    if not 0 <= party < len(dims):
        raise ValueError(f"party {party} out of range")
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[party], dims[party]):
        raise ValueError(
            f"operator dim {op.shape} does not match local dim {dims[party]}"
        )
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[party] = op
    return tensor_product(factors)


def _as_party_tensor(op, shape):
    dims = shape.local_dims
    return np.asarray(op, dtype=complex).reshape(dims + dims)


def partial_trace(op, shape, keep):
    """Trace out every party not in `keep` (an iterable of 0-based indices).

    Returns the reduced operator on the kept parties, in their original order.
    """
    dims = shape.local_dims
    n = len(dims)
    keep = sorted(set(keep))
    T = _as_party_tensor(op, shape)
    # contract row/column indices of each traced-out party, highest first
    traced = 0
    for k in reversed(range(n)):
        if k in keep:
            continue
        T = np.trace(T, axis1=k, axis2=k + n - traced)
        traced += 1
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return T.reshape(d_keep, d_keep)


def partial_transpose(rho, party, shape):
    """Transpose the given party's indices only."""
    dims = shape.local_dims
    n = len(dims)
    T = _as_party_tensor(rho, shape)
    T = np.swapaxes(T, party, party + n)
    return T.reshape(rho.shape)


def is_hermitian(m, tol=HERMITICITY_TOL):
    m = np.asarray(m)
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    return float(np.abs(m - m.conj().T).max(initial=0.0)) <= tol * scale


def hermitian_eigenvalues(m, tol=HERMITICITY_TOL):
    """Ascending real eigenvalues of a Hermitian matrix (checked)."""
    if not is_hermitian(m, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh((m + np.asarray(m).conj().T) / 2)


def operator_norm(m):
    """Largest singular value."""
    m = np.asarray(m, dtype=complex)
    if not np.any(m):
        return 0.0
    return float(np.linalg.norm(m, 2))


def product_factors(vec, shape, rel_tol=1e-10):
    """Split a full vector into local factors if it is a product vector.

    Peels parties off one at a time with an SVD; returns (factors, residual)
    where residual is the relative weight left outside the leading rank-one
    term, and factors is None when the vector is not product within rel_tol.
    """
    dims = shape.local_dims
    v = np.asarray(vec, dtype=complex)
    total = np.linalg.norm(v)
    if total == 0:
        raise ValueError("zero vector has no factorization")
    factors = []
    rest = v
    worst = 0.0
    for d in dims[:-1]:
        M = rest.reshape(d, -1)
        u, s, vh = np.linalg.svd(M, full_matrices=False)
        tail = np.linalg.norm(s[1:]) / np.linalg.norm(s)
        worst = max(worst, tail)
        if tail > rel_tol:
            return None, worst
        factors.append(u[:, 0])
        rest = s[0] * vh[0]
    factors.append(rest)
    return factors, worst


def validate_density(rho, tol=1e-10):
    """Raise unless rho is Hermitian, unit-trace and positive within tol."""
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho, tol=max(tol, HERMITICITY_TOL)):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"density matrix trace {tr} != 1")
    lo = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
    if lo < -max(tol, 1e-8):
        raise ValueError(f"density matrix has negative eigenvalue {lo}")
    return rho
