"""Generalized urn laboratory.

An urn grows to capacity ``T``; each new ball is black with probability
``pi(current black share)``. The package provides exact laws, the zero-cost
share dynamics, recovery of ``pi`` from trajectories, large-deviation
machinery and Monte Carlo estimators.
"""

from .action import ActionReport, action_report, mogulskii_action, scale_invariant_L, scaled_action
from .curves import ScalarCurve, Trajectory
from .dynamics import fixed_points, probe_stability, terminal_point, transformed_urn_function, zero_cost_trajectory
from .errors import (BudgetExceededError, DegeneracyError, InfeasibleEventError, InvertibilityError,
                     NumericalError, UrnError, ValidationError)
from .inverse import estimate_urn_function, first_passage
from .mgf import entropy_ode_residual, legendre, solve_mgf
from .montecarlo import BatchResult, empirical_entropy, importance_estimate, run_batch
from .urn import (Constant, FinalShareDistribution, History, Linear, LipschitzPath, Majority, SeedComposition,
                  Table, embed, exact_distribution, simulate, urn_function_from_dict, urn_function_from_json)
from .variational import EventSpec, entropy_curve, minimize_action

__version__ = "0.1.0"
