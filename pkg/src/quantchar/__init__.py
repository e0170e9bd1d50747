"""quantchar: characterize probability measures through quantization error.

Computes L^p quantization error functions of probability measures and uses
them as characterization tools: quantization-based metrics, density and
CDF reconstruction from error functions alone, Voronoi/covering geometry,
and reproducible convergence and incompleteness experiments.
"""

__version__ = "0.1.0"

from .characterization import (
    EFunctionHandle,
    MollifierSpec,
    cdf_from_e11,
    efunction,
    make_mollifier,
    mollified_density,
    reduce_even_p,
    survival_from_e22,
)
from .geometry import (
    EUCLIDEAN,
    CoveringCertificate,
    NormSpec,
    bounded_cell_grid_euclidean,
    cell_radius,
    covering_grid,
    in_open_cell,
    lr_norm,
    nearest_index,
    verify_covering,
)
from .measures import (
    Dirac,
    DiscreteMeasure,
    LogNormal,
    Normal,
    SampledMeasure,
    Uniform,
    call_price,
    cdf_1d,
    measure_from_json,
    measure_to_json,
    moment,
    partial_second_moment_1d,
    quantile_1d,
    sample,
    standard_gaussian_sampled,
)
from .metrics import QDistReport, qdist, wasserstein_1d, wasserstein_assignment
from .quanterror import (
    McEstimate,
    QErrorQuery,
    lloyd,
    qerr,
    qerr_analytic_1d,
    qerr_discrete,
    qerr_mc,
)
from .experiments import run_counterexample, run_equivalence, run_grid_law

__all__ = [name for name in dir() if not name.startswith("_")]
