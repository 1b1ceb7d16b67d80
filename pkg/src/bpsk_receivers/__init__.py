"""Error probabilities and quantum limits for BPSK coherent-state receivers under phase diffusion."""
from .bounds import FockOperator, dephased_rho, helstrom_bound, homodyne_pdf, sql_error
from .merit import GainValue, SigmaMax, gain, sigma_max
from .montecarlo import EstimateWithError, ShotConfig, simulate_dpnr, simulate_homodyne, simulate_hynore
from .phase_noise import NoiseModel, PhaseGrid, count_rate, dpnr_count_distribution, make_grid
from .pnr import (
    CoherentAmplitude,
    HlDistribution,
    PnrResolution,
    TruncationWarning,
    branch_energies,
    hl_distribution,
    pnr_prob,
)
from .receivers import (
    ErrorReport,
    MapThreshold,
    Receiver,
    ReceiverParams,
    dpnr_error,
    helstrom_noiseless,
    hynore_error_at,
    hynore_joint,
    hynore_optimize,
    kennedy_noiseless,
    map_threshold,
    sql_noiseless,
)
from .sweep import Row, SweepSpec, read_csv, run_sweep, write_csv

__version__ = "0.1.0"
