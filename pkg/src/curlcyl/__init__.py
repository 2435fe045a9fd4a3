"""Ground states and level diagnostics for the cylindrically symmetric
curl-curl problem via meridian reduction and constrained minimization."""

from .grid import (MeridianGrid, MaterialField, ConfigurationError,
                   build_grid, unit_materials, constant_materials,
                   materials_from_csv, dump_field_csv, load_field_csv)
from .forms import (DiscreteForms, assemble_forms, evaluate_J, evaluate_dJ)
from .spectral import SpectralSplit, SpectrumError, eigenpairs, split
from .nehari import (NehariPoint, SolverOptions, ConvergenceError,
                     DegenerateDirectionError, fiber_maximize,
                     sphere_minimize, multistart_bound_states, fiber_inequality_slack)
from .backends import (CurlCurlBackend, make_backend, make_aniso_backend,
                       residual)
from .analysis import (GroundStateResult, SweepResult, WindowError,
                       compute_S, energy_bounds, ground_state, lambda_sweep,
                       estimate_eps_nu, count_m_tilde, count_m_tilde_aniso,
                       bubble, continuity_of_ground_states)
from .config import RunConfig, load_config

__version__ = "0.1.0"
