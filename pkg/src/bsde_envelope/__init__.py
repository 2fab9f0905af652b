"""Lipschitz envelopes of uniformly continuous BSDE generators and the
sandwich of envelope BSDEs that certifies uniqueness numerically."""

__version__ = "0.1.0"

from .errors import (ConfigError, DomainError, EvaluationError, NumericalBlowupError,
                     ParameterError)
from .modulus import Modulus, certify_modulus, eval_modulus, minimal_growth_constant
from .generators import (EnvelopeGenerator, Generator, combined_constant, envelope_gap_bound,
                         eval_envelope, search_radius, verify_lemma1)
from .solver import (GridConfig, PathBundle, SolutionField, TerminalCondition,
                     evaluate_solution, residual_check, simulate_paths, solve_fd)
from .squeeze import (SqueezeConfig, SqueezeReport, check_monotone, run_squeeze,
                      uniform_bound_check, uniqueness_certificate)
from .counterexamples import (strict_comparison_demo, verify_quartic_solution,
                              verify_sqrt_family)
