"""Firm-panel econometrics: fixed-effect absorption, clustered errors, local projections."""

from .absorb import Absorbed, absorb_fixed_effects, dummy_matrix, singleton_mask
from .estimate import (
    FIRM_CONTROLS,
    RegressionResult,
    RegressionSpec,
    cumulative_specs,
    design_frame,
    estimate_spec,
    format_table,
    local_projection,
    results_frame,
    write_results_csv,
)
from .vcov import clustered_vcov, one_way

__all__ = [
    "Absorbed", "absorb_fixed_effects", "dummy_matrix", "singleton_mask",
    "FIRM_CONTROLS", "RegressionResult", "RegressionSpec", "cumulative_specs", "design_frame",
    "estimate_spec",
    "format_table", "local_projection", "results_frame", "write_results_csv",
    "clustered_vcov", "one_way",
]
