"""Parabolic Ginzburg-Landau simulator and vortex-analysis toolkit on flat tori."""

__version__ = "0.1.0"

from .dynamics import (IntegratorConfig, PhaseWave, RandomBudget, Trajectory,
                       VortexLines, VortexPoints, VortexRing, evolve,
                       load_trajectory, make_initial, save_trajectory, step)
from .energy import EnergyLedger, dissipation_check, energy_density, measure_of_set, total_energy
from .fields import (ComplexField, OneForm, TwoForm, current, jacobian,
                     load_snapshot, save_snapshot, spectral_gradient)
from .geometry import CapFunction, TorusGeometry, ball_mask, d_plus, torus_distance
from .hodge import (GaugeDecomposition, HodgeParts, WindingVector, gauge_decompose,
                    harmonic_floor_map, hodge_decompose, winding)
from .mcf import (RingTrack, StressField, brakke_diagnostic, ring_mcf_compare,
                  stress_identity_check, stress_tensor, trace_identity_check)
from .vortex import (DensitySample, VortexSet, clearing_out_experiment, density_scan,
                     extract_vortex_set)
from .weighted import (KernelEval, MonotonicityLedger, comparison_inequality,
                       fit_monotonicity_constants, kernel, localization_bound,
                       monotonicity_scan, time_integrated_identity, weighted_energy)
