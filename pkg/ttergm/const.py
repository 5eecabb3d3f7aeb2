"""Constants for the ttergm package."""

from typing import Final

DOMAIN: Final = "ttergm"

# Model presets
PRESET_CLASSIC: Final = "classic-tergm"
PRESET_TTERGM: Final = "ttergm"
PRESETS: Final = (PRESET_CLASSIC, PRESET_TTERGM)

# MCMC defaults
DEFAULT_BURN_IN_SWEEPS: Final = 50
DEFAULT_SAMPLE_INTERVAL_SWEEPS: Final = 1
DEFAULT_N_SAMPLES: Final = 200
DEFAULT_N_CHAINS: Final = 1
# A chain sitting at the empty or complete graph for more than this share of sweeps is degenerate
DEGENERACY_FRACTION: Final = 0.5
# Sweeps handed to the kernel per call, further capped so one call draws at most UNIFORM_BUFFER_DRAWS uniforms
SWEEP_CHUNK: Final = 2048
UNIFORM_BUFFER_DRAWS: Final = 2**22

# Estimation defaults
MPLE_GRADIENT_TOL: Final = 1e-8
MPLE_MAX_ITER: Final = 100
MCMLE_STEP_TOL: Final = 1e-3
MCMLE_MAX_OUTER: Final = 20
MCMLE_INNER_MAX_ITER: Final = 50
MAX_STEP_HALVINGS: Final = 10
RIDGE_LAMBDA: Final = 1e-6
ESS_WARNING_FRACTION: Final = 0.05
# |theta| beyond this on the logit scale means the MPLE diverges (complete separation)
SEPARATION_THETA_LIMIT: Final = 25.0
CONDITION_LIMIT: Final = 1e12
MCMLE_LL_TOL: Final = 1e-8

# Result flags
FLAG_RIDGE: Final = "ridge"
FLAG_SEPARATION: Final = "separation"
FLAG_ESS_WARNING: Final = "ess_warning"
FLAG_DEGENERATE: Final = "degenerate"
FLAG_NO_IMPROVEMENT: Final = "no_improvement"
FLAG_EMPTY_BLOCK: Final = "empty_block"
FLAG_INSUFFICIENT_RUNS: Final = "insufficient_runs"

# Ingestion defaults
DEFAULT_TOP_K_REPOS: Final = 100
DEFAULT_TOP_K_INFLUENCERS: Final = 10
WINDOW_CALENDAR_MONTH: Final = "calendar-month"
LABEL_STEP_WIDTH: Final = 4
REJECTION_SAMPLE_SIZE: Final = 10
INFLUENCER_CUTOFF_NOTE: Final = (
    "top-k by follower count; the reference cohort keeps the 10 most followed users, "
    "each with at least 14 thousand followers, where the follower curve drops off sharply"
)

# Evaluation defaults
DEFAULT_N_RUNS: Final = 30
SIGNIFICANCE_LEVEL: Final = 0.05
METRIC_IN_DEG: Final = "in_deg"
METRIC_OUT_DEG: Final = "out_deg"
METRIC_INFLUENCER_IN_DEG: Final = "influencer_in_deg"
METRIC_INFLUENCER_OUT_DEG: Final = "influencer_out_deg"
METRICS: Final = (METRIC_IN_DEG, METRIC_OUT_DEG, METRIC_INFLUENCER_IN_DEG, METRIC_INFLUENCER_OUT_DEG)

# Output layout
NETWORK_MANIFEST: Final = "network.json"
COVARIATES_FILE: Final = "covariates.json"
NODE_IDS_FILE: Final = "nodes.json"
EDGES_SUFFIX: Final = ".edges"
NETWORK_DIR: Final = "network"
USERS_DIR: Final = "users"
SIMULATED_DIR: Final = "simulated"
FEATURES_FILE: Final = "features.csv"
ACTIVITY_FILE: Final = "activity.csv"
TOPOLOGY_FILE: Final = "topology.csv"
REJECTIONS_FILE: Final = "rejections.json"
ESTIMATE_FILE: Final = "estimate.json"
EVALUATION_CSV: Final = "evaluation.csv"
EVALUATION_JSON: Final = "evaluation.json"

# CLI exit codes
EXIT_OK: Final = 0
EXIT_CONFIG: Final = 2
EXIT_IO: Final = 3
EXIT_DATA: Final = 4

LOG_LEVELS: Final = ("DEBUG", "INFO", "WARNING", "ERROR")
DEFAULT_LOG_LEVEL: Final = "INFO"
UINT64_MAX: Final = 2**64 - 1

# Config blocks, one per command
CONF_INGEST: Final = "ingest"
CONF_ESTIMATE: Final = "estimate"
CONF_SIMULATE: Final = "simulate"
CONF_EVALUATE: Final = "evaluate"
CONF_BOOTSTRAP: Final = "bootstrap"

# Models compared by the evaluate command
MODEL_TTERGM: Final = "TTERGM"
MODEL_TERGM: Final = "TERGM"
MODEL_BLOCK: Final = "Block Model"
