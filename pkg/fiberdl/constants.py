"""
Physical defaults, stream identifiers and exit codes for fiberdl
"""

from scipy import constants as const

PLANCK = const.h  # 6.626e-34 J s

# Fiber defaults (standard single-mode fiber)
ALPHA_DB_PER_KM = 0.2
BETA2_PS2_PER_KM = -21.683
GAMMA_PER_W_KM = 1.3
NOISE_FIGURE_DB = 5.0
CARRIER_HZ = 1.946e14

# Signal defaults
ROLLOFF = 0.1
RRC_SPAN_SYMBOLS = 0  # 0: exact periodic pulse over the whole frame
ANALOG_OVERSAMPLING = 6
DIGITAL_OVERSAMPLING = 2

# Step-size heuristic
LOG_STEP_ADJUST = 0.4

# Least-squares filter design
LS_MIN_FREQ_POINTS = 256
LS_POINTS_PER_TAP = 8
LS_PENALTY_START = 1e-3
LS_PENALTY_ROUNDS = 6
LS_PENALTY_GROWTH = 10.0
MO_RIDGE = 1e-10
MO_MAX_SWEEPS = 20
MO_TOL = 1e-9

# Optimizer (Adam) defaults
LEARNING_RATE = 0.001
BATCH_SIZE = 50
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
PRUNE_FRACTION = 0.4
DIVERGENCE_FACTOR = 1e3
DIVERGENCE_PATIENCE = 100

# Metrics
SNR_CAP_DB = 150.0
ERROR_ENERGY_FLOOR = 1e-15

# Named random substreams, all derived from one root seed
STREAM_TRAIN = 1
STREAM_EVAL = 2
STREAM_INIT = 3
STREAM_SIMULATE = 4

# Response export
RESPONSE_POINTS = 1024

# Exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3
