"""Layered Gaussian fields, chaos measures, distorted Brownian motion,
and additive-functional time changes on the punctured plane."""

__version__ = "0.1.0"

from .chaos import (Ball, Box, ChaosDensity, ScalingFit, WeightSpec,
                    build_regularized_measure, check_weight_domination,
                    measure_of_set, smallball_scaling)
from .clock import (REVUZ_REFERENCE, ClockSample, accumulate_pcaf,
                    consistency_check, invert_clock, time_change)
from .config import RunConfig, load_config, validate_config
from .covariance import (CutoffSequence, LayerCovarianceTable, green_massive,
                         kernel_km, kernel_km_closed_form, layer_covariance)
from .dbm import (AnnulusDomain, ExitTimes, PathSample,
                  conservativeness_diagnostic, drift, kill_path,
                  simulate_path)
from .errors import (ClockExhaustedError, ConfigError, ContractError,
                     DomainError, NumericalError, ResolutionError)
from .gff import (FieldState, GridSpec, LayerSample, LayerSampler,
                  accumulate_field, bilinear_interpolate, field_variance,
                  get_sampler, sample_layer)
from .gridio import read_field, read_grid_binary, write_field, write_grid_binary
from .pipeline import run_pipeline
from .potential import (HolderFit, PotentialReport, dyadic_shell_bound,
                        fit_holder_envelope, origin_mass_decay,
                        polar_probe_lattice, resolvent_kernel_singularity,
                        resolvent_potential_mc, s00_report,
                        singular_integral_check)
from .rng import substream
