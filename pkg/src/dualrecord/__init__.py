"""Population-size estimation for dependent dual-record systems."""
from .classic import (lp_estimate, log_integrated_jeffreys, log_integrated_uniform,
                      log_lik_mtb, log_lik_phi, nour_estimate)
from .exceptions import (DegenerateQuadratic, DegenerateTable, DomainError, DualRecordError,
                         HyperparamInfeasible, InfeasibleScenario, NoRealRoot)
from .integrated import (EstimateResult, Hyperparams, bootstrap_ci, estimate,
                         grid_argmax_oracle, log_integrated_tb, n0_root, r1_of,
                         select_hyperparams, unrelated_params)
from .simulation import (Scenario, StudyConfig, derive_probs, builtin_scenarios, run_study,
                         simulate_table)
from .tables import (Direction, DualRecordTable, MtbParams, PhiParams, margins, read_table,
                     validate)

__version__ = "0.1.0"
