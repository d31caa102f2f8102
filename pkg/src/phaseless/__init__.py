"""Compressive phase retrieval: phaseless l_p decoders, bi-Lipschitz estimates and error bounds."""

__version__ = "0.1.0"

from .errors import InputError, ReportError
from .signal_model import (
    Field,
    MeasurementEnsemble,
    NoiseSpec,
    PhaselessObservation,
    SignalVector,
    dist_p,
    gaussian_matrix,
    phaseless_measure,
    sample_signal,
    sigma_k,
)
from .decoders import DecodeResult, DecoderConfig, decode_l1, decode_lp, multi_restart, oracle_decode_real
from .bilipschitz import BiLipschitzEstimate, beta0, check_separation, estimate_bilipschitz, lipschitz_ratio
from .bounds import (
    BoundConstants,
    check_instance_bound,
    gaussian_r_margin,
    r_margin,
    theorem_constants,
)
from .experiments import (
    CampaignReport,
    ExperimentConfig,
    load_report,
    persist_report,
    run_22_impossibility_probe,
    run_noise_sweep,
    run_nonuniform_22_trial,
    run_uniform_campaign,
)
