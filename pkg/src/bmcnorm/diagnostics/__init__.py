from .degrees import DegreeReport, degree_bound_report
from .discrepancy import DiscrepancyReport, Mode, PairStats, discrepancy_report
from .mixing import (
    MixingReport,
    absolute_spectral_gap,
    cluster_distance_profile,
    exact_distance_profile,
    geometric_bound,
    mixing_report,
    mixing_time,
    pseudo_spectral_gap,
)
from .nets import (
    EpsilonNet,
    LightHeavySplit,
    NetBoundCheck,
    epsilon_net,
    heavy_mass,
    light_heavy_split,
    light_pair_threshold,
    net_maximum,
    net_norm_bound_check,
    net_witness,
)

__all__ = [
    "DegreeReport",
    "DiscrepancyReport",
    "EpsilonNet",
    "LightHeavySplit",
    "MixingReport",
    "Mode",
    "NetBoundCheck",
    "PairStats",
    "absolute_spectral_gap",
    "cluster_distance_profile",
    "degree_bound_report",
    "discrepancy_report",
    "epsilon_net",
    "exact_distance_profile",
    "geometric_bound",
    "heavy_mass",
    "light_heavy_split",
    "light_pair_threshold",
    "mixing_report",
    "mixing_time",
    "net_maximum",
    "net_norm_bound_check",
    "net_witness",
    "pseudo_spectral_gap",
]
