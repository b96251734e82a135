"""bookielab: binary betting-market simulator.

Kelly bettors, bookmaker profit functions and price solvers, online
price-learning policies (stochastic approximation, follow-the-leader,
risk balancing, LMSR), regret accounting, and a reproducible experiment
harness with a CLI.
"""

from .beliefs import (BeliefDistribution, Empirical, PointMass,
                      SigmoidGaussianMixture, SosdResult, TruncatedExponential,
                      TruncatedNormal, TwoBlock, Uniform,
                      distribution_from_config, sosd_compare)
from .agents import BetOutcome, BettorDraw, Side, bettor_utility, kelly_bet
from .market import (BookmakerBelief, PriceOptimum, Prices, ProfitCurves,
                     ProfitLowerBounds, count_foc_roots, critical_mrl,
                     expected_profit, fair_profit, foc_residuals,
                     profit_gradient, profit_lower_bounds,
                     solve_fair_optimal, solve_optimal_prices, total_utility)
from .policies import (BetObservation, FixedPolicy, FtlPolicy, LmsrPolicy,
                       RiskBalancePolicy, SaPolicy, estimate_belief,
                       sa_default_schedule)
from .metrics import (Trajectory, adversarial_regret,
                      adversarial_regret_series, realized_profit_terms,
                      regret_rate_fit, stochastic_regret)
from .config import ExperimentConfig, WealthSpec, config_digest, load_config, \
    load_sweep
from .harness import (RunResult, RunSummary, read_trajectory_csv,
                      realized_cash_flow, run_experiment, run_sweep,
                      solve_benchmark, trajectory_checkpoints,
                      write_summary_json, write_trajectory_csv)
from . import errors

__version__ = "0.1.0"
