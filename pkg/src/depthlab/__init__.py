"""depthlab: halfspace-depth location and scatter estimation for
alpha-symmetric distributions under Huber contamination."""

__version__ = "0.1.0"

from .errors import InputError, NumericalError
from .norms import (ALPHA_INF, alpha_norm, alpha_norm_rows, candidate_directions,
                    conjugate_index, is_signed_permutation, pd_sqrt,
                    sphere_directions, validate_scatter, zero_matrix_lemma_check)
from .models import (AlphaModel, ContaminatedModel, GrowthCertificate, MarginalLaw,
                     ModelContaminant, PointMassContaminant, ProjectionTestResult,
                     check_growth_condition, contaminant_from_dict,
                     default_contaminant, ks_threshold, ks_two_sample,
                     load_model_toml, make_gaussian_spherical,
                     make_independent_stable, model_from_dict, parse_model_spec,
                     projection_law_test, sample_contaminated)
from .location import (BOUND_C1, BOUND_C2, VC_CONSTANT, DepthEngine, MedianResult,
                       RateBound, location_bound_rhs, max_depth_deviation,
                       min_admissible_n, population_hd, sample_hd, tukey_median)
from .scatter import (RatioRange, ScatterMedianResult, alpha_ratio_range,
                      population_alpha_scatter_sigma, population_alpha_shd,
                      population_scatter_sigma, population_shd, ratio_range,
                      sample_alpha_shd, sample_scatter_median, sample_shd,
                      scatter_bound_rhs, scatter_pseudometric)
from .experiments import (CSV_COLUMNS, CellSummary, ExperimentConfig,
                          ExperimentReport, MethodSettings, Record, SlopeFit,
                          load_config, rate_slope, records_from_csv,
                          records_from_json, replication_seed, run_experiment,
                          run_location_rate, run_maxdepth_coverage,
                          run_scatter_rate, summarize)

__all__ = [name for name in dir() if not name.startswith("_")]
