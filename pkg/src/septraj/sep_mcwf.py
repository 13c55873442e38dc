"""Separability-restricted Monte Carlo wave functions.

The restricted dynamics propagates an explicit product state |psi_1>...|psi_n>.
Each Kraus branch K^b is replaced by its partially reduced factors (K^b)_k
(the operator sandwiched between the bystander factors), the branch output is
the product of the reduced factors, and the branch weight is

    w_b = prod_k ||(K^b)_k psi_k||^2 / |<K^b>|^(2(n-1)).

Branches whose mean <K^b> vanishes have no product form of this kind.  They
are handled losslessly where possible: branch vectors K^b Psi with singular
mean are grouped, and a unitary remix of the group is sought under which
every remixed vector is itself a product vector (for two branches this is a
quadratic pencil condition on the first-cut reshaping).  If such a remix
exists the remixed branches fire with their squared norms as weights; if not,
the group is frozen out (weight zero) and counted.  Single-party systems
bypass all of this and reproduce the unrestricted sampler exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import product_factors, tensor_product
from .mcwf import norm_sq, normalized, select_branch
from .model import build_kraus

SINGULAR_TOL = 1e-8     # |<K>| below this (relative to ||K||) is singular
VANISH_TOL = 1e-12      # squared-norm scale treated as annihilated
PRODUCT_TOL = 1e-10     # relative Schmidt tail for the product test
ORTHO_TOL = 1e-8        # remix rows must be orthogonal to this


@dataclass
class ProductState:
    """Explicit product state: one normalized factor per party."""

    factors: list
    shape: object

    def __post_init__(self):
        if len(self.factors) != self.shape.parties:
            raise ValueError("one factor per party required")
        self.factors = [np.asarray(f, dtype=complex) for f in self.factors]
        for f, d in zip(self.factors, self.shape.local_dims):
            if f.shape != (d,):
                raise ValueError("factor dimension mismatch")

    def full(self):
        return tensor_product(self.factors)

    def normalized(self):
        return ProductState([normalized(f) for f in self.factors], self.shape)


def from_vector(vec, shape, rel_tol=PRODUCT_TOL):
    """Factor a full state vector into a ProductState; error if entangled."""
    factors, residual = product_factors(np.asarray(vec, dtype=complex), shape,
                                        rel_tol=rel_tol)
    if factors is None:
        raise ValueError(
            f"initial state is not a product state (Schmidt residual "
            f"{residual:.3e} exceeds {rel_tol:.0e}); the restricted dynamics "
            f"requires a factorizable initial state"
        )
    return ProductState([normalized(f) for f in factors], shape)


def partially_reduce(op, state, k):
    """(F)_k: operator F sandwiched between the bystander factors of party k.

    Divides by the bystander norms, so scaling any psi_j (j != k) leaves the
    result unchanged.  Linear in F.  For a single party this is F itself.
    """
    shape = state.shape
    n = shape.parties
    if n == 1:
        return np.asarray(op, dtype=complex)
    dims = shape.local_dims
    A = np.asarray(op, dtype=complex).reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise ValueError("too many parties for reduction bookkeeping")
    row = letters[:n]
    col = letters[n:2 * n]
    operands, subs = [A], row + col
    divisor = 1.0
    for j in range(n):
        if j == k:
            continue
        psi = state.factors[j]
        operands.append(psi.conj())
        subs += "," + row[j]
        operands.append(psi)
        subs += "," + col[j]
        divisor *= norm_sq(psi)
    subs += "->" + row[k] + col[k]
    return np.einsum(subs, *operands) / divisor


def mean_value(op, state):
    """<F> = <Psi|F|Psi> / <Psi|Psi> on the full product vector."""
    full = state.full()
    return complex(np.vdot(full, np.asarray(op, dtype=complex) @ full)
                   / norm_sq(full))


@dataclass
class ReducedKrausBranch:
    """One branch of the restricted map in product form."""

    mean: complex
    reduced_ops: list      # (K)_k, one per party
    out_factors: list      # (K)_k psi_k, unnormalized
    weight: float          # prod ||(K)_k psi_k||^2 / |<K>|^(2(n-1))
    regular: bool
    vanished: bool = False # some reduced factor annihilated its party

    def output_state(self, shape):
        return ProductState([normalized(f) for f in self.out_factors], shape)

    def effective_operator(self, shape):
        """Full-space product operator (x)_k (K)_k / <K>^(n-1)."""
        op = tensor_product(self.reduced_ops)
        n = shape.parties
        if n > 1:
            op = op / self.mean ** (n - 1)
        return op


def restricted_branch(op, state, op_norm_hint=None):
    """Reduce one Kraus operator against a product state.

    Regular means |<K>| exceeds SINGULAR_TOL relative to the operator norm
    hint (operator 2-norm of K if not supplied); the weight formula is only
    meaningful in that case.
    """
    shape = state.shape
    n = shape.parties
    mean = mean_value(op, state)
    scale = op_norm_hint
    if scale is None:
        scale = float(np.linalg.norm(np.asarray(op), 2))
    regular = (n == 1) or (abs(mean) > SINGULAR_TOL * scale)
    reduced = [partially_reduce(op, state, k) for k in range(n)]
    outs = [R @ psi for R, psi in zip(reduced, state.factors)]
    norms2 = [norm_sq(v) for v in outs]
    vanished = n > 1 and any(w <= VANISH_TOL * scale ** 2 for w in norms2)
    weight = math.prod(norms2)
    if n > 1 and regular and not vanished:
        weight = weight / abs(mean) ** (2 * (n - 1))
    if not regular or vanished:
        weight = 0.0
    return ReducedKrausBranch(mean=mean, reduced_ops=reduced, out_factors=outs,
                              weight=float(weight), regular=regular,
                              vanished=vanished)


def _as_product(vec, shape):
    """Normalized factors of vec if it is a product vector, else None."""
    w = norm_sq(vec)
    if w <= 1e-300:
        return None
    factors, _ = product_factors(vec / np.sqrt(w), shape, rel_tol=PRODUCT_TOL)
    if factors is None:
        return None
    return [normalized(f) for f in factors]


def _pencil_directions(v1, v2, shape):
    """Unitary 2x2 remix rows making both combinations product vectors.

    Works on the first-cut reshaping M_i of each vector: a combination
    w1 v1 + w2 v2 is product across that cut iff the pencil w1 M1 + w2 M2
    has rank one, i.e. every 2x2 minor vanishes -- a quadratic
    a w1^2 + b w1 w2 + c w2^2 = 0 per minor.  Roots are taken from the
    largest minor and every candidate is verified by the full product test.
    Returns the two orthonormal rows, or None.
    """
    d0 = shape.local_dims[0]
    M1 = v1.reshape(d0, -1)
    M2 = v2.reshape(d0, -1)
    ref = max(float(np.linalg.norm(M1)), float(np.linalg.norm(M2))) ** 2
    best = None
    rows, cols = M1.shape
    for r1 in range(rows):
        for r2 in range(r1 + 1, rows):
            for c1 in range(cols):
                for c2 in range(c1 + 1, cols):
                    sub1 = M1[np.ix_([r1, r2], [c1, c2])]
                    sub2 = M2[np.ix_([r1, r2], [c1, c2])]
                    a = complex(np.linalg.det(sub1))
                    c = complex(np.linalg.det(sub2))
                    b = complex(np.linalg.det(sub1 + sub2)) - a - c
                    size = max(abs(a), abs(b), abs(c))
                    if best is None or size > best[0]:
                        best = (size, a, b, c)
    if best is None:
        return None
    size, a, b, c = best
    if size <= 1e-12 * ref:
        # Every combination is product across the first cut; try the
        # identity remix and let verification decide.
        return (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    roots = np.roots([a, b, c])  # ratios w1/w2
    dirs = []
    for r in roots:
        if np.isfinite(r):
            dirs.append(np.array([r, 1.0], dtype=complex))
    # a vanishing leading coefficient drops one root: it sits at infinity,
    # i.e. the direction (1, 0)
    if len(dirs) < 2 and abs(a) <= 1e-12 * size:
        dirs.append(np.array([1.0, 0.0], dtype=complex))
    if len(dirs) < 2:
        return None
    u1 = dirs[0] / np.linalg.norm(dirs[0])
    u2 = dirs[1] / np.linalg.norm(dirs[1])
    if abs(np.vdot(u1, u2)) > ORTHO_TOL:
        return None
    return (u1, u2)


def _resolve_singular_group(vecs, indices, shape):
    """Try to fire a group of singular-mean branch vectors losslessly.

    Returns a list of (original index slot, weight, factors) for the fired
    remixed branches, or None if the group must be frozen.
    """
    J = len(vecs)
    if J == 1:
        factors = _as_product(vecs[0], shape)
        if factors is None:
            return None
        return [(indices[0], norm_sq(vecs[0]), factors)]
    if J == 2:
        rows = _pencil_directions(vecs[0], vecs[1], shape)
        if rows is None:
            return None
        out = []
        for slot, row in zip(indices, rows):
            phi = row[0] * vecs[0] + row[1] * vecs[1]
            w = norm_sq(phi)
            if w <= VANISH_TOL * (norm_sq(vecs[0]) + norm_sq(vecs[1])):
                out.append((slot, 0.0, None))
                continue
            factors = _as_product(phi, shape)
            if factors is None:
                return None
            out.append((slot, w, factors))
        return out
    return None  # three or more: no remix search implemented; freeze


@dataclass
class SepBranchTable:
    """Per-step branch decomposition of the restricted map at one state."""

    weights: list          # one weight per branch slot, in branch order
    outputs: list          # normalized output factors per slot (or None)
    branches: list         # ReducedKrausBranch per slot (None for remixed)
    counters: dict


def sep_branch_table(ops, state, op_norms=None, full_weights=False):
    """Classify and reduce every branch operator against a product state.

    ops are full-space branch operators (Kraus set for the sampler, bare
    jump operators for rate computations); weights follow the restricted
    product form, or the unrestricted squared norms if full_weights is set
    (states are unaffected by that switch).
    """
    shape = state.shape
    n = shape.parties
    if op_norms is None:
        op_norms = [float(np.linalg.norm(np.asarray(op), 2)) for op in ops]
    counters = {}
    weights = [0.0] * len(ops)
    outputs = [None] * len(ops)
    branches = [None] * len(ops)
    singular_vecs, singular_idx = [], []
    full = state.full() if n > 1 else state.factors[0]
    for b, op in enumerate(ops):
        br = restricted_branch(op, state, op_norm_hint=op_norms[b])
        branches[b] = br
        if br.regular:
            if br.vanished:
                counters["vanished_factor"] = counters.get("vanished_factor", 0) + 1
                continue
            weights[b] = br.weight
            outputs[b] = [normalized(f) for f in br.out_factors]
        else:
            phi = op @ full
            w = norm_sq(phi)
            if w <= VANISH_TOL * op_norms[b] ** 2 * norm_sq(full):
                counters["annihilated"] = counters.get("annihilated", 0) + 1
                continue
            singular_vecs.append(phi)
            singular_idx.append(b)
    if singular_vecs:
        fired = _resolve_singular_group(singular_vecs, singular_idx, shape)
        if fired is None:
            counters["frozen"] = counters.get("frozen", 0) + len(singular_vecs)
        else:
            for slot, w, factors in fired:
                if factors is None:
                    counters["annihilated"] = counters.get("annihilated", 0) + 1
                    continue
                weights[slot] = w
                outputs[slot] = factors
                counters["remixed_fired"] = counters.get("remixed_fired", 0) + 1
    if full_weights:
        for b, op in enumerate(ops):
            if outputs[b] is not None:
                weights[b] = norm_sq(op @ full)
    return SepBranchTable(weights=weights, outputs=outputs, branches=branches,
                          counters=counters)


def sep_step(kraus, state, rng, op_norms=None, full_weights=False):
    """One restricted stochastic step; returns (state, branch index, counters).

    Consumes exactly one uniform variate when any branch is available, laid
    out over the branch slots in index order; if every branch weight
    vanishes the state is left unchanged (identity step) and counted.
    """
    table = sep_branch_table(kraus.operators, state, op_norms=op_norms,
                             full_weights=full_weights)
    counters = dict(table.counters)
    if sum(table.weights) <= 1e-300:
        counters["identity_steps"] = counters.get("identity_steps", 0) + 1
        return state, -1, counters
    b = select_branch(table.weights, rng)
    return ProductState(table.outputs[b], state.shape), b, counters


class SepStepper:
    """Adapter feeding sep_step into the shared ensemble runner."""

    def __init__(self, model, tau, state0, full_weights=False):
        self.kraus = build_kraus(model, tau)
        self.op_norms = [float(np.linalg.norm(op, 2))
                         for op in self.kraus.operators]
        self.state0 = state0.normalized()
        self.full_weights = full_weights

    def initial(self):
        return self.state0

    def step(self, state, rng):
        state, _, counters = sep_step(self.kraus, state, rng,
                                      op_norms=self.op_norms,
                                      full_weights=self.full_weights)
        return state, counters

    def density(self, state):
        full = state.full()
        return np.outer(full, full.conj())


def run_sep_ensemble(model, state0, tau, n_steps, n_traj, master_seed,
                     observables, threads=1, full_weights=False):
    """Ensemble of restricted trajectories; state0 is a ProductState or a
    factorizable full vector."""
    from .ensemble import run_ensemble as _run
    if not isinstance(state0, ProductState):
        state0 = from_vector(state0, model.shape)
    stepper = SepStepper(model, tau, state0, full_weights=full_weights)
    return _run(stepper, tau, n_steps, n_traj, master_seed, observables,
                threads=threads)


def mix_branches(operators, unitary):
    """Remix a list of branch operators by a unitary: M'_i = sum_j W_ij M_j.

    The completely positive map sum_b M_b rho M_b+ is invariant under any
    such remix; the restricted branch operators inherit this freedom.
    """
    W = np.asarray(unitary, dtype=complex)
    if W.shape != (len(operators), len(operators)):
        raise ValueError("unitary size must match the number of branches")
    if not np.allclose(W @ W.conj().T, np.eye(len(operators)), atol=1e-12):
        raise ValueError("mixing matrix is not unitary")
    return [sum(W[i, j] * operators[j] for j in range(len(operators)))
            for i in range(len(operators))]
