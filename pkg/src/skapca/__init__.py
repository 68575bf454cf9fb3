"""Multi-user TDD secret-key agreement under a pilot contamination attack."""
from .channel import ConfigError, SystemConfig, db_to_linear
from .estimation import analytic_mse_eve, estimate_leakage
from .harness import SweepSpec, emit_analytics, run_sweep, run_trials, write_csv
from .mathkit import RngStream, marcum_q1
from .oracles import verify_oracles
from .secrecy import bi_awgn_mutual_information, outage_probability, sinr_analytic
from .trial import TrialRecord, run_trial

__all__ = [
    "ConfigError", "RngStream", "SweepSpec", "SystemConfig", "TrialRecord", "analytic_mse_eve",
    "bi_awgn_mutual_information", "db_to_linear", "emit_analytics", "estimate_leakage",
    "marcum_q1", "outage_probability", "run_sweep", "run_trial", "run_trials", "sinr_analytic",
    "verify_oracles", "write_csv",
]
