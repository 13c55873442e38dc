"""Entanglement and distance measures, plus the observable descriptors used
by the ensemble runner and the CSV output."""

from dataclasses import dataclass

import numpy as np

from .hilbert import hermitian_eigenvalues, partial_transpose


def negativity(rho, party, shape):
    """max(0, -lambda_min) of the partial transpose over one party.

    Zero for separable states; positive only if the partial transpose fails
    to be positive semidefinite.
    """
    evals = hermitian_eigenvalues(partial_transpose(rho, party, shape))
    return float(max(0.0, -evals[0]))


def overlap(rho, target):
    """<t|rho|t> for a normalized target vector."""
    t = np.asarray(target, dtype=complex)
    return float(np.vdot(t, rho @ t).real)


def population(rho, index):
    """Diagonal weight of one computational-basis state."""
    return float(rho[index, index].real)


def intermediate_population(rho, indices):
    """Total weight of a set of basis states (e.g. the middle decay levels)."""
    return float(sum(rho[i, i].real for i in indices))


def expectation(rho, op):
    """tr(O rho) for a Hermitian operator O."""
    return float(np.trace(np.asarray(op) @ rho).real)


def trace_distance(a, b):
    """(1/2) sum |eig(a - b)| for Hermitian a, b."""
    evals = hermitian_eigenvalues(a - b)
    return float(0.5 * np.sum(np.abs(evals)))


@dataclass
class Observable:
    """A named scalar functional of the density matrix.

    kind is one of 'negativity' (payload: party index), 'population'
    (payload: basis index), 'population_sum' (payload: index tuple),
    'overlap' (payload: target vector), 'expectation' (payload: Hermitian
    operator), 'trace' (payload ignored).
    """

    name: str
    kind: str
    payload: object = None
    shape: object = None

    def evaluate(self, rho):
        if self.kind == "negativity":
            return negativity(rho, self.payload, self.shape)
        if self.kind == "population":
            return population(rho, self.payload)
        if self.kind == "population_sum":
            return intermediate_population(rho, self.payload)
        if self.kind == "overlap":
            return overlap(rho, self.payload)
        if self.kind == "expectation":
            return expectation(rho, self.payload)
        if self.kind == "trace":
            return float(np.trace(rho).real)
        raise ValueError(f"unknown observable kind {self.kind!r}")

    @property
    def linear(self):
        return self.kind != "negativity"
