"""Outage analysis and coalition formation for cooperative energy-harvesting relays."""

from .analytic_outage import (
    AnalyticContext,
    decay_rate_probe,
    outage_asymptotic,
    outage_theorem1,
    prob_decode_set_size,
    q2n_closed_form,
)
from .channel_model import NetworkConfig, cdf_x, pdf_x, pdf_x_exp_approx, sample_link
from .coalition_game import (
    check_core_equal_split,
    check_superadditivity,
    coalition_value,
    enumerate_partitions,
    optimal_partition,
)
from .simulator import Partition, estimate_outage, run_trial, simulate, sweep
from .special_functions import bessel_k, bessel_k_small_x_series

__all__ = [
    "AnalyticContext",
    "NetworkConfig",
    "Partition",
    "bessel_k",
    "bessel_k_small_x_series",
    "cdf_x",
    "check_core_equal_split",
    "check_superadditivity",
    "coalition_value",
    "decay_rate_probe",
    "enumerate_partitions",
    "estimate_outage",
    "optimal_partition",
    "outage_asymptotic",
    "outage_theorem1",
    "pdf_x",
    "pdf_x_exp_approx",
    "prob_decode_set_size",
    "q2n_closed_form",
    "run_trial",
    "sample_link",
    "simulate",
    "sweep",
]
