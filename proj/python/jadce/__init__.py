"""Python access to the clustered JADCE detectors and experiment harness."""

from ._core import (
    admm,
    build_pilot_bank,
    calibrate_threshold,
    cb_somp,
    config_echo,
    detect_and_pmd,
    hadamard_basis,
    mutual_coherence,
    nmse,
    rip_diagnostic,
    run_experiment,
    sbl,
)

__all__ = [
    "admm",
    "build_pilot_bank",
    "calibrate_threshold",
    "cb_somp",
    "config_echo",
    "detect_and_pmd",
    "hadamard_basis",
    "mutual_coherence",
    "nmse",
    "rip_diagnostic",
    "run_experiment",
    "sbl",
]
