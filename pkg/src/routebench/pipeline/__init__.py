from .analysis import (
    Approach,
    ConfusionLabel,
    classify_approach,
    classify_verifier_outcome,
    scan_imports,
    verification_events,
)
from .assets import AssetError, AssetRegistry, ContextKind, ContextSpec, summarize_paper
from .frameworks import (
    AttemptTrace,
    Budgets,
    CallPurpose,
    FinalStatus,
    FrameworkKind,
    RunRecord,
    run_framework,
)
from .prompts import build_prompt

__all__ = [
    "Approach",
    "AssetError",
    "AssetRegistry",
    "AttemptTrace",
    "Budgets",
    "CallPurpose",
    "ConfusionLabel",
    "ContextKind",
    "ContextSpec",
    "FinalStatus",
    "FrameworkKind",
    "RunRecord",
    "build_prompt",
    "classify_approach",
    "classify_verifier_outcome",
    "run_framework",
    "scan_imports",
    "summarize_paper",
    "verification_events",
]
