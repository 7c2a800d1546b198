from .motifs import MOTIFS, Motif, MotifPlacements, get_motif, load_motif, motif_from_dict, motif_placements
from .generators import HypergraphSample, gen_g3, gen_sbm_latent, gen_t3, hyperedges_given_latent
from .decomposition import (
    ExactMotifVariance,
    ModifiedHoeffding,
    MotifCountStat,
    MotifHoeffding,
    conditional_mean_count,
    count_motif,
    count_motif_by_subsets,
    count_motif_injections,
    exact_variance,
    expected_count,
    hoeffding_terms,
    modified_hoeffding_terms,
    motif_statistic,
)
from .experiment import (
    EXPERIMENT_COLUMNS,
    CltExperiment,
    ExperimentRow,
    RateDetails,
    clt_experiment,
    rate,
    rate_details,
)


__all__ = [
    "MOTIFS",
    "Motif",
    "MotifPlacements",
    "get_motif",
    "load_motif",
    "motif_from_dict",
    "motif_placements",
    "HypergraphSample",
    "gen_g3",
    "gen_sbm_latent",
    "gen_t3",
    "hyperedges_given_latent",
    "ExactMotifVariance",
    "ModifiedHoeffding",
    "MotifCountStat",
    "MotifHoeffding",
    "conditional_mean_count",
    "count_motif",
    "count_motif_by_subsets",
    "count_motif_injections",
    "exact_variance",
    "expected_count",
    "hoeffding_terms",
    "modified_hoeffding_terms",
    "motif_statistic",
    "EXPERIMENT_COLUMNS",
    "CltExperiment",
    "ExperimentRow",
    "RateDetails",
    "clt_experiment",
    "rate",
    "rate_details",
]
