"""ldpfair: frequency estimation under local differential privacy, with
hash-fairness analytics, inference/poisoning attacks, and an experiment
harness for reproducing their disparate impacts at desk scale."""

__version__ = "0.1.0"

from .hashing import (  # noqa: F401
    EntropyReport,
    HashFn,
    entropy,
    fairness_ratio,
    hash_bucket,
    max_attainable_entropy,
    mix64,
    optimal_entropy,
    preimage_set,
)
from .protocols import (  # noqa: F401
    DrawBudgetExceeded,
    InfeasibleRho,
    ProtocolParams,
    Report,
    derive_g,
    estimate_all,
    estimate_frequency,
    folh_report,
    olh_report,
    support_count,
)
from .attacks import (  # noqa: F401
    AttackOutcome,
    ObservationSet,
    bia_predict,
    gain,
    mga_craft,
    mga_craft_fixed_hash,
)
from .datasets import Dataset, gen_gaussian, gen_uniform, ingest_csv, true_frequencies  # noqa: F401
from .metrics import PreimageStats, asr, preimage_stats, rho_advisor, uloss  # noqa: F401
from .populations import SubpopulationAssignment, UserRecord, assign_subpopulations  # noqa: F401
from .rng import Stream  # noqa: F401
