"""pertfool: adversarial perturbations for dense networks.

First-order perturbation analysis gives the network Jacobian as a layerwise
product; dual-norm duality turns the linearized fooling problem into closed
forms.  On top of that core the package provides the classic attack baselines,
operator-norm regression attacks, robustness metrics, and a benchmark CLI.
"""

__version__ = "0.1.0"

from .numeric import (pnorm, dual_exponent, dual_maximizer, power_iteration,
                      finite_diff_jacobian, ConvergenceError)
from .network import (Layer, Network, ForwardTrace, TrainConfig, forward,
                      jacobian, vjp, softmax_proxy, classify,
                      cross_entropy_grad, random_network, train_sgd,
                      save_model, load_model, ModelFormatError, TrainingError,
                      ACTIVATIONS)
from .attacks import (AttackSpec, AttackOutcome, DegenerateGradientError,
                      margin_loss, targeted_margin, feasibility_check,
                      gn_closed_form, min_norm_step, attack_alg1,
                      attack_alg1_n, attack_alg2, attack_fgsm,
                      attack_deepfool, attack_pgd, attack_random, run_attack,
                      METHODS, PROXIES)
from .opnorm import (RegressionAttackResult, regression_objective, attack_l2,
                     attack_l1, attack_linf_bruteforce,
                     network_regression_attack)
from .data import (Dataset, IdxFormatError, gen_blobs, gen_rings, gen_dataset,
                   load_idx_images, load_idx_labels, load_mnist, save_dataset,
                   load_dataset)
from .metrics import (RobustnessReport, MinEpsResult, RhoStats, correct_mask,
                      error_rate, attack_all, fooling_ratio, rho1, rho1_stats,
                      rho2, rho2_stats, min_eps_for_threshold)
from .bench import (DEFAULT_EPS_GRID, SweepRecord, run_sweep, sweep_csv,
                    run_report, report_json)
