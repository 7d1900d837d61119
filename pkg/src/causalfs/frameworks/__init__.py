from .config import FRAMEWORKS, MODEL_NAMES, THREE_STAGE_MODELS, SelectorConfig
from .selectors import (
    SELECTION_THRESHOLD,
    OutcomeAdaptiveElasticNet,
    OutcomeAdaptiveLasso,
    SelectionResult,
    ThreeStageSelector,
    TwoStageSelector,
    make_selector,
    run_oaenet,
    run_oal,
    run_selector,
    run_three_stage,
    run_two_stage_prelim,
    selected_from,
)
from .wamd import compute_wamd, iptw_weights

__all__ = [
    "FRAMEWORKS",
    "MODEL_NAMES",
    "SELECTION_THRESHOLD",
    "THREE_STAGE_MODELS",
    "OutcomeAdaptiveElasticNet",
    "OutcomeAdaptiveLasso",
    "SelectionResult",
    "SelectorConfig",
    "ThreeStageSelector",
    "TwoStageSelector",
    "compute_wamd",
    "iptw_weights",
    "make_selector",
    "run_oaenet",
    "run_oal",
    "run_selector",
    "run_three_stage",
    "run_two_stage_prelim",
    "selected_from",
]
