"""Quantum trajectories for Markovian open systems in truncated Fock space."""
from ._accel import USE_NUMBA
from .ensemble import (EnsembleSummary, TrajectoryRecord, jump_statistics, poincare_points,
                       run_ensemble, run_trajectory)
from .fock import (coherent_state, displacement_operator, expectation, make_annihilation,
                   make_creation, normalize)
from .frame import DisplacedState, delta_alpha_sq, from_displaced_frame, moving_frame_run, to_displaced_frame
from .master import evolve_master, lindblad_rhs, trace_distance
from .models import (DuffingParams, HOParams, classical_alpha_evolve, classical_duffing_evolve,
                     damped_ho, duffing)
from .system import ModelSpec
from .unravelings import (JumpEvent, NoiseStream, qj_diffusive_step, qj_step, qsd_step,
                          sample_complex_wiener)

__version__ = "0.1.0"
