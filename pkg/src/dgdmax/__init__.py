"""Decentralized gradient-descent maximization for composite nonconvex
strongly-concave minimax problems over a simulated gossip network."""

from .graphs import (Graph, MixingMatrix, complete_graph, gen_erdos_renyi,
                     laplacian_mixing, load_graph, load_mixing, make_graph,
                     ring_graph, save_graph, save_mixing,
                     spectral_radius_deviation, validate_mixing)
from .harness import (RunConfig, grid_search, parse_trace, resolve_experiment,
                      run_experiment)
from .metrics import (StationarityReport, deviation, prox_grad_mapping,
                      prox_grad_original, stationarity_report,
                      tracking_residual)
from .optimizers import (DivergenceError, GdaState, NetworkState, Schedule,
                         SubsolverBudgetError, default_delta,
                         default_stepsizes, dgdmax_init, dgdmax_run,
                         dgdmax_step, gda_run, gda_step, gdmax_run,
                         gdmax_step, iteration_budget_T)
from .problems import (Dataset, DrlrInstance, MinimaxProblem, ToyMintyInstance,
                       drlr_estimate_L, gen_synthetic, minty_condition_violated,
                       minty_operator, parse_libsvm, partition_dataset,
                       save_libsvm, verify_gradients)
from .subsolvers import (DualSubproblem, SubsolveResult, apg_maximize,
                         project_simplex, theoretical_budget_s_t)

__version__ = "0.1.0"
