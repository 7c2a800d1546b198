import math

# ANSI color codes for terminal output
CHECKMARK = "\u2713"  # ✓
CROSS = "\u2717"  # ✗
WARNING = "\u26a0"  # ⚠
GREEN = "\033[92m"
RED = "\033[91m"
ORANGE = "\033[33m"
RESET = "\033[0m"

# Output formats
FORMAT_JSON = "json"
FORMAT_CSV = "csv"
FORMAT_CHECKLIST = "checklist"
OUTPUT_FORMATS = [FORMAT_JSON, FORMAT_CSV, FORMAT_CHECKLIST]

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSERTION = 2

# Numerical tolerances
TOL_OPERATOR = 1e-12  # single-operator identities
TOL_PIPELINE = 1e-10  # composed pipelines
TOL_QUADRATURE = 1e-8
TOL_STANDARDIZED = 1e-8
TOL_W1 = 1e-9
TOL_PROB = 1e-12
TOL_JOINT = 1e-10

# Enumeration and experiment caps
DEFAULT_SIZE_CAP = 10**7
MAX_CHAOS_COMPONENTS = 14
MAX_QUADRUPLE_SUPPORTS = 200
MAX_DECOMPOSITION_SUBSETS = 10**6
MAX_EXACT_LAW_SUPPORT = 10**6
MAX_EXPERIMENT_DRAWS = 5 * 10**9
MAX_EXACT_VARIANCE_PAIRS = 10**7
MAX_AUTOMORPHISM_VERTICES = 8

# Quadrature horizon for the Mehler integral
QUADRATURE_HORIZON = 40.0

# Monte Carlo acceptance gate, in standard errors
SE_GATE = 4.0

# Uniform bound on sup_J E[W_J^4] / E[W_J^2]^2 for the hypercontractivity condition
HC_BOUND = 100.0

# Lyapunov constant 2(sqrt 2 + 1)
LYAPUNOV_CONSTANT = 2.0 * (math.sqrt(2.0) + 1.0)

# Descriptor format versions
DESCRIPTOR_FORMAT_VERSION = "1.0"
MIN_DESCRIPTOR_VERSION = "1.0"

# Environment variables
ENV_SEED = "MALLIAVIN_SEED"
ENV_WORKERS = "MALLIAVIN_WORKERS"
ENV_SIZE_CAP = "MALLIAVIN_SIZE_CAP"
ENV_OUTPUT_FORMAT = "MALLIAVIN_OUTPUT_FORMAT"

# Severity levels
SEVERITY_CRITICAL = "CRITICAL"
SEVERITY_EXPERIMENT = "EXPERIMENT"

# Suites with codes, categories and descriptions
SUITES = {
    "verify-operators": {
        "code": "MD001",
        "category": "Operators",
        "severity": SEVERITY_CRITICAL,
        "description": "Gradient idempotence, commutation, centering and integration by parts MUST hold",
        "recommendation": "Inspect the model that produced the largest residual (reported in value)",
    },
    "chaos": {
        "code": "MD002",
        "category": "Operators",
        "severity": SEVERITY_CRITICAL,
        "description": "Chaos projectors MUST reconstruct, be idempotent, orthogonal and diagonalize L",
        "recommendation": "Compare Mobius and composition projectors on the failing model",
    },
    "glauber": {
        "code": "MD003",
        "category": "Dynamics",
        "severity": SEVERITY_EXPERIMENT,
        "description": "Glauber Monte Carlo MUST match Mehler's formula within 4 standard errors",
        "recommendation": "Increase --paths or check the seed/worker split",
    },
    "concentration": {
        "code": "MD004",
        "category": "Concentration",
        "severity": SEVERITY_CRITICAL,
        "description": "Covariance identity, Efron-Stein and McDiarmid MUST hold on random functionals",
        "recommendation": "Inspect the latent state with negative slack",
    },
    "clt-bernoulli": {
        "code": "MD005",
        "category": "Normal approximation",
        "severity": SEVERITY_EXPERIMENT,
        "description": "Conditional Bernoulli CLT: empirical d_W MUST stay below the Lyapunov bound",
        "recommendation": "Increase --samples to shrink the empirical W1 floor",
    },
    "wass-bounds": {
        "code": "MD006",
        "category": "Normal approximation",
        "severity": SEVERITY_CRITICAL,
        "description": "Carre du champ Wasserstein bound MUST dominate the exact d_W",
        "recommendation": "Inspect the standardized functional with negative margin",
    },
    "fourth-moment": {
        "code": "MD007",
        "category": "Fourth moment",
        "severity": SEVERITY_CRITICAL,
        "description": "Fourth-moment proposition, influence lemma and H2 identity MUST hold",
        "recommendation": "Inspect the homogeneous sum with the largest violation",
    },
    "dejong": {
        "code": "MD008",
        "category": "Fourth moment",
        "severity": SEVERITY_EXPERIMENT,
        "description": "De Jong quantities SHOULD shrink as the number of components grows",
        "recommendation": "Check EGF/HC/H1/H2 conditions on the reported functional",
    },
    "hypergraph-motif": {
        "code": "MD009",
        "category": "Hypergraphs",
        "severity": SEVERITY_EXPERIMENT,
        "description": "Motif Hoeffding identities MUST hold and empirical d_W SHOULD decrease with n",
        "recommendation": "Increase --samples or shrink the schedule",
    },
}

# Motif statistics: centered at E[N|Z] (tilde) or at E[N] (bar)
STATISTIC_TILDE = "tilde"
STATISTIC_BAR = "bar"
STATISTICS = [STATISTIC_TILDE, STATISTIC_BAR]
