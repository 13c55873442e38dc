"""Trajectory simulations of open multipartite quantum systems under
unrestricted Lindblad dynamics and a separability-restricted counterpart,
with measures to quantify the difference between the two."""

__version__ = "0.1.0"

from .hilbert import (SystemShape, basis_ket, basis_state, embed_local,
                      hermitian_eigenvalues, operator_norm, partial_trace,
                      partial_transpose, product_factors, qubits,
                      tensor_product)
from .model import (KrausSet, LindbladModel, PerturbationForm, build_kraus,
                    consistent_lambdas, effective_hamiltonian,
                    gauge_transform, perturbation_form, sum_jump_products)
from .mcwf import (BranchDistribution, branch_states, mcwf_step, normalized,
                   run_ensemble, run_trajectory)
from .sep_mcwf import (ProductState, ReducedKrausBranch, from_vector,
                       mean_value, mix_branches, partially_reduce,
                       restricted_branch, run_sep_ensemble, sep_branch_table,
                       sep_step)
from .master_eq import (GeneratorOutput, SeparableEnsemble, integrate,
                        lindblad_rhs, sep_generator, sep_piecewise_propagate)
from .stochastic import (JumpIncrement, sep_sse_step, sep_svn_step, sse_step,
                         svn_step)
from .measures import (Observable, intermediate_population, negativity,
                       overlap, population, trace_distance)
from .ensemble import EnsembleResult, trajectory_rng
from .scenarios import (SCENARIOS, SeparableFormReport, bell_decay_model,
                        check_separable_form, cnot_model, get_scenario,
                        product_decay_model, swap_model)
from .tables import compare_columns, compare_results, read_csv, write_csv
