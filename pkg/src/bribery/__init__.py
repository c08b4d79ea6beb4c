"""Bribery games in rating systems: payoffs, equilibria, dynamics, fairness."""
from .core import (BriberyError, EffortStrategy, Fresh, InfeasibleProfileError, Market,
                   Rater, Rating, SellerState, UndefinedMeanError, apply_effort, count_cost,
                   example1_market, initial_utility, mean_rating, net_utility, payoff,
                   strategy_cost, strategy_payoff, utility)
from .equilibrium import (EquilibriumReport, NonConvergenceError, PayoffMatrix, best_response,
                          build_matrix, first_order_profile, iterated_elimination,
                          overbribery_gap, pure_nash, social_optimum)
from .greedy import Budget, Dominance, dominates, greedy_strategy, is_profitable_regime

__all__ = [name for name in dir() if not name.startswith("_")]
