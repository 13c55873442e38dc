"""Bundled two-qubit scenarios, their closed-form references, and the
structural check for manifestly separable models.

Four families are registered:

* bell-decay      -- cascade |11> -> (|Phi+>, |Phi->) -> |00> through the
                     maximally entangled intermediate states,
* product-decay   -- the same cascade through the product intermediates
                     |10>, |01> (with a branch-rotated variant that mixes
                     the two upper decay channels unitarily),
* cnot            -- a repeatedly applied CNOT jump driving the state
                     toward an equal mixture of input and gate output,
* swap            -- two parties coupled by a swap jump, with closed-form
                     solutions for both dynamics.
"""

from dataclasses import dataclass, field

import numpy as np

from .hilbert import (SystemShape, basis_ket, basis_state, embed_local,
                      partial_trace, product_factors, qubits)
from .measures import Observable
from .mcwf import normalized
from .model import LindbladModel, sum_jump_products
from .sep_mcwf import ProductState

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)
KETPLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def _two_qubit_kets():
    shape = qubits(2)
    k = {lab: basis_state(lab, shape) for lab in
         [(0, 0), (0, 1), (1, 0), (1, 1)]}
    phi_plus = (k[(0, 1)] + k[(1, 0)]) / np.sqrt(2.0)
    phi_minus = (k[(0, 1)] - k[(1, 0)]) / np.sqrt(2.0)
    return shape, k, phi_plus, phi_minus


def bell_decay_model(gamma_up_plus=9.0, gamma_down_plus=1.0,
                     gamma_up_minus=1.0, gamma_down_minus=9.0):
    """Cascade through the entangled intermediates: |11> feeds |Phi+/-> which
    drain to |00>."""
    shape, k, phi_p, phi_m = _two_qubit_kets()
    up = k[(1, 1)]
    gnd = k[(0, 0)]
    ls = [
        np.sqrt(gamma_up_plus) * np.outer(phi_p, up.conj()),
        np.sqrt(gamma_down_plus) * np.outer(gnd, phi_p.conj()),
        np.sqrt(gamma_up_minus) * np.outer(phi_m, up.conj()),
        np.sqrt(gamma_down_minus) * np.outer(gnd, phi_m.conj()),
    ]
    return LindbladModel(
        shape=shape, hamiltonian=np.zeros((4, 4)), lindblads=ls,
        labels=("to_plus", "plus_to_ground", "to_minus", "minus_to_ground"),
        rates={"gamma_up_plus": gamma_up_plus,
               "gamma_down_plus": gamma_down_plus,
               "gamma_up_minus": gamma_up_minus,
               "gamma_down_minus": gamma_down_minus},
        name="bell-decay")


def product_decay_model(gamma_up_10=9.0, gamma_10_down=1.0,
                        gamma_up_01=1.0, gamma_01_down=9.0, rotated=False):
    """Cascade through the product intermediates |10> and |01>.

    With rotated=True the two upper channels are replaced by the unitary
    combinations (L1 +/- L3)/sqrt(2), which turn their jump outputs into
    |Phi+/->; this requires equal upper rates and leaves the unrestricted
    dynamics unchanged.
    """
    shape, k, _, _ = _two_qubit_kets()
    ls = [
        np.sqrt(gamma_up_10) * np.outer(k[(1, 0)], k[(1, 1)].conj()),
        np.sqrt(gamma_10_down) * np.outer(k[(0, 0)], k[(1, 0)].conj()),
        np.sqrt(gamma_up_01) * np.outer(k[(0, 1)], k[(1, 1)].conj()),
        np.sqrt(gamma_01_down) * np.outer(k[(0, 0)], k[(0, 1)].conj()),
    ]
    labels = ("up_to_10", "10_to_ground", "up_to_01", "01_to_ground")
    if rotated:
        if not np.isclose(gamma_up_10, gamma_up_01):
            raise ValueError(
                "the rotated variant mixes the two upper channels and "
                "requires equal upper rates")
        l1, l3 = ls[0], ls[2]
        ls[0] = (l1 + l3) / np.sqrt(2.0)
        ls[2] = (l3 - l1) / np.sqrt(2.0)
        labels = ("up_rot_plus", "10_to_ground", "up_rot_minus",
                  "01_to_ground")
    return LindbladModel(
        shape=shape, hamiltonian=np.zeros((4, 4)), lindblads=ls,
        labels=labels,
        rates={"gamma_up_10": gamma_up_10, "gamma_10_down": gamma_10_down,
               "gamma_up_01": gamma_up_01, "gamma_01_down": gamma_01_down},
        name="product-decay-rotated" if rotated else "product-decay")


def cascade_populations(t, g_up_b1, g_b1_down, g_up_b2, g_b2_down):
    """Closed-form level populations for either decay cascade.

    Returns (top, branch1, branch2, ground); branch1/branch2 are the
    intermediate levels fed at rates g_up_b1 / g_up_b2.
    """
    t = np.asarray(t, dtype=float)
    g_top = g_up_b1 + g_up_b2
    p_top = np.exp(-g_top * t)
    if np.isclose(g_top, g_b1_down) or np.isclose(g_top, g_b2_down):
        raise ValueError("degenerate rates: closed form needs distinct decay "
                         "constants")
    p1 = g_up_b1 / (g_top - g_b1_down) * (np.exp(-g_b1_down * t) - p_top)
    p2 = g_up_b2 / (g_top - g_b2_down) * (np.exp(-g_b2_down * t) - p_top)
    return p_top, p1, p2, 1.0 - p_top - p1 - p2


def bell_decay_density(t, gamma_up_plus=9.0, gamma_down_plus=1.0,
                       gamma_up_minus=1.0, gamma_down_minus=9.0):
    """Exact unrestricted density matrix of the Bell cascade at time t."""
    shape, k, phi_p, phi_m = _two_qubit_kets()
    p_top, pp, pm, p_gnd = cascade_populations(
        t, gamma_up_plus, gamma_down_plus, gamma_up_minus, gamma_down_minus)
    rho = (p_top * np.outer(k[(1, 1)], k[(1, 1)].conj())
           + pp * np.outer(phi_p, phi_p.conj())
           + pm * np.outer(phi_m, phi_m.conj())
           + p_gnd * np.outer(k[(0, 0)], k[(0, 0)].conj()))
    return rho


def cnot_model(rate=1.0):
    """A CNOT applied as a jump operator at the given rate."""
    shape = qubits(2)
    gate = np.array([[1, 0, 0, 0],
                     [0, 1, 0, 0],
                     [0, 0, 0, 1],
                     [0, 0, 1, 0]], dtype=complex)
    return LindbladModel(shape=shape, hamiltonian=np.zeros((4, 4)),
                         lindblads=[np.sqrt(rate) * gate], labels=("cnot",),
                         rates={"rate": rate}, name="cnot")


def cnot_overlap_analytic(t, psi0, rate=1.0):
    """<T| rho(t) |T> with T the gate output of psi0, for the CNOT scenario.

    The jump superoperator squares to the identity, so
    rho(t) = e^{-rt}(cosh(rt) rho0 + sinh(rt) L rho0 L).
    """
    t = np.asarray(t, dtype=float)
    gate = cnot_model(rate).lindblads[0] / np.sqrt(rate)
    psi0 = normalized(np.asarray(psi0, dtype=complex))
    target = gate @ psi0
    c0 = abs(np.vdot(target, psi0)) ** 2
    return np.exp(-rate * t) * (np.cosh(rate * t) * c0 + np.sinh(rate * t))


def cnot_mixture_target(psi0, rate=1.0):
    """The late-time attractor (1/2)(rho0 + L rho0 L) of the CNOT scenario."""
    gate = cnot_model(rate).lindblads[0] / np.sqrt(rate)
    psi0 = normalized(np.asarray(psi0, dtype=complex))
    out = gate @ psi0
    return 0.5 * (np.outer(psi0, psi0.conj()) + np.outer(out, out.conj()))


def swap_operator(d=2):
    V = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            V[i * d + j, j * d + i] = 1.0
    return V


def swap_model(gamma=1.0, d=2):
    """Two identical parties coupled by a swap jump L = sqrt(gamma) V."""
    shape = SystemShape((d, d))
    return LindbladModel(shape=shape,
                         hamiltonian=np.zeros((d * d, d * d)),
                         lindblads=[np.sqrt(gamma) * swap_operator(d)],
                         labels=("swap",), rates={"gamma": gamma},
                         name="swap")


def swap_analytic_full(t, rho0, gamma=1.0, d=2):
    """Closed-form unrestricted solution rho(t) for the swap scenario."""
    V = swap_operator(d)
    rho0 = np.asarray(rho0, dtype=complex)
    g = gamma * np.asarray(t, dtype=float)
    return np.exp(-g) * (np.cosh(g) * rho0 + np.sinh(g) * (V @ rho0 @ V))


def swap_analytic_restricted_weights(n_steps, tau, gamma=1.0):
    """Restricted piecewise weights (stay, swapped) after n_steps of size tau.

    Each step moves weight tau*gamma between the two product members, giving
    the exact two-state binomial (1 +/- (1 - 2 gamma tau)^s) / 2.
    """
    r = (1.0 - 2.0 * gamma * tau) ** n_steps
    return 0.5 * (1.0 + r), 0.5 * (1.0 - r)


# ---------------------------------------------------------------------------
# structural separability check


def local_sum_project(op, shape):
    """Orthogonal projection of an operator onto local sums c 1 + sum_k B_k.

    Returns (projected operator, relative residual); the residual vanishes
    exactly when op is a sum of single-party terms.
    """
    op = np.asarray(op, dtype=complex)
    dim = shape.total_dim
    c = np.trace(op) / dim
    proj = c * np.eye(dim, dtype=complex)
    for k in range(shape.parties):
        d_k = shape.local_dims[k]
        red = partial_trace(op, shape, keep=(k,)) / (dim // d_k)
        red = red - (np.trace(red) / d_k) * np.eye(d_k, dtype=complex)
        proj += embed_local(red, k, shape)
    scale = np.linalg.norm(op)
    resid = np.linalg.norm(op - proj) / (scale if scale > 0 else 1.0)
    return proj, float(resid)


def operator_product_factors(op, shape, rel_tol=1e-10):
    """Factor an operator as a tensor product of single-party operators.

    Works on the vectorized operator with the row/column indices of each
    party grouped together, so the usual sequential Schmidt split applies.
    Returns (factors or None, worst relative residual).
    """
    op = np.asarray(op, dtype=complex)
    n = shape.parties
    if n == 1:
        return [op], 0.0
    dims = shape.local_dims
    A = op.reshape(dims + dims)
    perm = []
    for k in range(n):
        perm.extend([k, n + k])
    vec = np.transpose(A, perm).reshape(-1)
    sq_shape = SystemShape(tuple(d * d for d in dims))
    factors, resid = product_factors(vec, sq_shape, rel_tol=rel_tol)
    if factors is None:
        return None, resid
    return [f.reshape(d, d) for f, d in zip(factors, dims)], resid


@dataclass
class SeparableFormReport:
    """Outcome of the manifest-separability check on a model."""

    verdict: str               # 'manifestly_separable' | 'not_manifest'
    hamiltonian_residual: float
    jump_residuals: list       # per jump operator: product-form residual
    jump_square_residual: float
    tol: float = 1e-10

    @property
    def manifest(self):
        return self.verdict == "manifestly_separable"


def check_separable_form(model, tol=1e-10):
    """Check whether a model is manifestly separability-preserving.

    Three structural conditions: the Hamiltonian is a sum of single-party
    terms, every jump operator is a tensor product of single-party
    operators, and the summed square sum_a L^a+ L^a is again a local sum.
    Models failing any condition are reported as 'not_manifest' (which is
    not a proof that they entangle).
    """
    _, h_resid = local_sum_project(model.hamiltonian, model.shape)
    jump_resids = []
    for L in model.lindblads:
        _, resid = operator_product_factors(L, model.shape, rel_tol=tol)
        jump_resids.append(float(resid))
    _, sq_resid = local_sum_project(sum_jump_products(model), model.shape)
    ok = (h_resid <= tol and sq_resid <= tol
          and all(r <= tol for r in jump_resids))
    return SeparableFormReport(
        verdict="manifestly_separable" if ok else "not_manifest",
        hamiltonian_residual=h_resid, jump_residuals=jump_resids,
        jump_square_residual=sq_resid, tol=tol)


# ---------------------------------------------------------------------------
# registry


@dataclass
class ScenarioSetup:
    """Everything a run needs: model, initial product state, observables,
    and the run defaults the scenario was tuned with."""

    model: LindbladModel
    initial: ProductState
    observables: list
    defaults: dict


@dataclass
class Scenario:
    name: str
    description: str
    make: object               # callable(**params) -> ScenarioSetup
    params: dict = field(default_factory=dict)


def _decay_observables(shape, phi_p=None, phi_m=None):
    obs = [Observable("negativity", "negativity", 0, shape),
           Observable("pop_ground", "population", 0),
           Observable("pop_excited", "population", 3)]
    if phi_p is None:
        obs += [Observable("pop_10", "population", 2),
                Observable("pop_01", "population", 1),
                Observable("pop_intermediate", "population_sum", (1, 2))]
    else:
        inter = (np.outer(phi_p, phi_p.conj()) + np.outer(phi_m, phi_m.conj()))
        obs += [Observable("pop_plus", "expectation", np.outer(phi_p, phi_p.conj())),
                Observable("pop_minus", "expectation", np.outer(phi_m, phi_m.conj())),
                Observable("pop_intermediate", "expectation", inter)]
    obs.append(Observable("trace", "trace"))
    return obs


def _make_bell_decay(**params):
    model = bell_decay_model(**params)
    shape, k, phi_p, phi_m = _two_qubit_kets()
    init = ProductState([KET1.copy(), KET1.copy()], shape)
    return ScenarioSetup(
        model=model, initial=init,
        observables=_decay_observables(shape, phi_p, phi_m),
        defaults=dict(dt=0.2, t_final=3.0, n_traj=600))


def _make_product_decay(rotated=False, **params):
    if rotated:
        base = dict(gamma_up_10=9.0, gamma_10_down=1.0,
                    gamma_up_01=9.0, gamma_01_down=9.0)
        base.update(params)
        params = base
    model = product_decay_model(rotated=rotated, **params)
    shape = model.shape
    init = ProductState([KET1.copy(), KET1.copy()], shape)
    return ScenarioSetup(
        model=model, initial=init,
        observables=_decay_observables(shape),
        defaults=dict(dt=0.2, t_final=3.0, n_traj=600))


def _make_cnot(initial="plus0", **params):
    model = cnot_model(**params)
    shape = model.shape
    initial = str(initial)
    if initial == "plus0":
        init = ProductState([KETPLUS.copy(), KET0.copy()], shape)
    elif initial == "10":
        init = ProductState([KET1.copy(), KET0.copy()], shape)
    else:
        raise ValueError(f"unknown cnot initial state {initial!r}")
    gate = model.lindblads[0] / np.sqrt(model.rates["rate"])
    target = normalized(gate @ init.full())
    obs = [Observable("overlap_target", "overlap", target),
           Observable("negativity", "negativity", 0, shape),
           Observable("pop_ground", "population", 0),
           Observable("trace", "trace")]
    return ScenarioSetup(model=model, initial=init, observables=obs,
                         defaults=dict(dt=0.2, t_final=8.0, n_traj=400))


def _make_swap(**params):
    model = swap_model(**params)
    shape = model.shape
    d = shape.local_dims[0]
    init = ProductState([basis_ket(0, d), normalized(np.ones(d))], shape)
    p0 = embed_local(np.outer(basis_ket(0, d), basis_ket(0, d).conj()), 0, shape)
    obs = [Observable("control_ground", "expectation", p0),
           Observable("overlap_initial", "overlap", init.full()),
           Observable("negativity", "negativity", 0, shape),
           Observable("trace", "trace")]
    return ScenarioSetup(model=model, initial=init, observables=obs,
                         defaults=dict(dt=0.01, t_final=1.0, n_traj=400))


SCENARIOS = {
    "bell-decay": Scenario(
        name="bell-decay",
        description="cascade decay through maximally entangled intermediate "
                    "states (rates gamma_up_plus, gamma_down_plus, "
                    "gamma_up_minus, gamma_down_minus)",
        make=_make_bell_decay,
        params=dict(gamma_up_plus=9.0, gamma_down_plus=1.0,
                    gamma_up_minus=1.0, gamma_down_minus=9.0)),
    "product-decay": Scenario(
        name="product-decay",
        description="cascade decay through the product intermediate states "
                    "|10> and |01>",
        make=_make_product_decay,
        params=dict(gamma_up_10=9.0, gamma_10_down=1.0,
                    gamma_up_01=1.0, gamma_01_down=9.0)),
    "product-decay-rotated": Scenario(
        name="product-decay-rotated",
        description="product cascade with the two upper channels unitarily "
                    "mixed into entangled-output form (equal upper rates)",
        make=lambda **p: _make_product_decay(rotated=True, **p),
        params=dict(gamma_up_10=9.0, gamma_10_down=1.0,
                    gamma_up_01=9.0, gamma_01_down=9.0)),
    "cnot": Scenario(
        name="cnot",
        description="incoherently applied CNOT gate (params: rate, "
                    "initial in {'plus0', '10'})",
        make=_make_cnot,
        params=dict(rate=1.0, initial="plus0")),
    "swap": Scenario(
        name="swap",
        description="two parties exchanged by a swap jump; closed forms "
                    "known for both dynamics (params: gamma, d)",
        make=_make_swap,
        params=dict(gamma=1.0, d=2)),
}


def get_scenario(name):
    try:
        return SCENARIOS[name]
    except KeyError:
        known = ", ".join(sorted(SCENARIOS))
        raise KeyError(f"unknown scenario {name!r}; available: {known}")
