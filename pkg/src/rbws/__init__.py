"""Reduced-basis warm-started iterative solvers for parametrized SPD systems.

The package benchmarks three solver identities on parametrized 3D diffusion
problems: multigrid-preconditioned CG (mgcg), the same solver warm-started
by an over-collocation reduced model (rbi-mgcg), and CG with a multispace
reduced-basis preconditioner warm-started by a POD solve (rbi-msrbcg).
"""

from .grid import (AssembledSystem, MeshHierarchy, ParametricProblem,
                   assemble_system, build_hierarchy, galerkin_coarsen)
from .hf import HighFidelitySolver
from .kernels import BACKEND, Smoother, smooth
from .krylov import OperatorError, SolveReport, cg_solve, pcg_solve
from .metrics import (average_residual, average_residual_curve, break_even,
                      rb_accuracy_curve, residual_spectrum)
from .msrb import (MsrbHierarchy, msrb_apply, msrb_richardson, msrb_train,
                   msrbcg_solve)
from .multigrid import MgContext, mg_build, mg_context_for, mg_vcycle, mgcg_solve
from .problems import ProblemSpec, example1, example2, get_problem
from .rb import (DegenerateBasisError, L1rocModel, PodBasis, deim_extend,
                 l1_indicator, l1roc_offline, l1roc_online, pod_build,
                 rbm_pod_solve)
from .sampling import lhs_sample
from .serialize import ModelFormatError, load_model, save_model
from .warmstart import (METHODS, MethodConfig, initial_residual,
                        make_initial_guess, rbi_pcg_solve)

__version__ = "0.1.0"
