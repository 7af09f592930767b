"""Performance analysis of a fluid-antenna UAV-to-ground link over
double-shadowed fading: Meijer G evaluation, Jakes eigen-branches,
closed-form and quadrature metrics, and a seeded Monte-Carlo simulator."""

from .channel import (BASELINE, DoubleShadowed, DSParams, FasModel, ProductPowerDistribution,
                      ds_cdf, ds_cdf_inverse, ds_pdf, ds_sf, fas_cdf, fas_pdf, fas_sf, s_ds)
from .correlation import (DEFAULT_RANK_THRESHOLD, EigenModel, JakesConfig, build_jakes,
                          eigen_decompose, effective_rank, jacobi_eigh, jakes_eigen_model)
from .errors import ConvergenceError, DegeneratePoleError, DomainError, FasUavError, ParameterError
from .meijer import GSpec, meijer_g, meijer_g_residue_series
from .metrics import (BPSK, MODULATIONS, AsymptoticReport, CapacityConfig, ModulationSpec, aber,
                      aber_series_m2, capacity, diversity_order, fit_outage_slope, outage)
from .montecarlo import (EstimateWithCI, SimConfig, estimate_ber, estimate_capacity, estimate_outage,
                         rng_create, rng_split, sample_ds_snr, sample_gamma_power, sample_ig_power,
                         simulate_approx, simulate_exact_copula)
from .specfun import bessel_j0, gamma_fn, gaussian_q, log_gamma

__version__ = "0.1.0"
