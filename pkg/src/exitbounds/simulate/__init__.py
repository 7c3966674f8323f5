from .montecarlo import (
    DEFAULT_SEED,
    MomentEstimate,
    SupMomentEstimate,
    SurvivalEstimate,
    default_step,
    estimate_moment,
    estimate_moments,
    estimate_sup_moment,
    estimate_survival,
    exit_time_samples,
    sample_exit_time,
)
from .finite_difference import (
    EigenResult,
    Grid2D,
    fd_eigen,
    fd_eigenfunction,
    fd_lambda1,
    fd_moment,
    fd_sup_mean_exit,
    fd_torsion_hierarchy,
)
