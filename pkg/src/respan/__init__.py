"""Renewable site screening for capacity expansion planning."""

from .flp import InstanceError, build_flp, check_design, expected_size, extract_design
from .generator import GenSpec, generate
from .io import read_instance, write_instance
from .metrics import compare
from .pipeline import RunRecord, SolveFailed, build_rlp, run_flp, run_sm
from .screening import ScreeningParams, build_siting_lp, estimate_params
from .system import SystemInstance, total_cost, validate_instance

__version__ = "0.1.0"

__all__ = [
    "GenSpec",
    "InstanceError",
    "RunRecord",
    "ScreeningParams",
    "SolveFailed",
    "SystemInstance",
    "build_flp",
    "build_rlp",
    "build_siting_lp",
    "check_design",
    "compare",
    "estimate_params",
    "expected_size",
    "extract_design",
    "generate",
    "read_instance",
    "run_flp",
    "run_sm",
    "total_cost",
    "validate_instance",
    "write_instance",
]
