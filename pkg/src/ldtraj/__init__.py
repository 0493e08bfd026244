"""Large-deviation Hamiltonians, Lagrangians and optimal trajectories for empirical
distributions of Markov chains, 1-D diffusions and lattice particle systems."""

from .chain import RateMatrix, evolve, forward_velocity, generator_apply, load_model, prob_dist, two_state, velocity
from .errors import (
    Infeasible,
    MassDrift,
    NoConvergence,
    PositivityLoss,
    SingularBeyondKernel,
    SupportViolation,
    ValidationError,
    WindowOverflow,
    ZeroMass,
)
from .flow import action, momentum_flow, position_flow, shoot, two_state_oracle
from .hamiltonian import finite_n_consistency, grad_f, grad_mu, hamiltonian
from .legendre import entropy_rate, lagrangian, modified_rates, optimal_momentum

__version__ = "0.1.0"
