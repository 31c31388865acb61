"""Pass thresholds and default parameters, kept in one place.

Experiments read their gates from here and the acceptance tests import the
same names, so a gate cannot change in one place only.
"""

# exact identities
IDENTITY_RTOL = 1e-9
IDENTITY_ATOL = 1e-12
IDENTITY_MAX_SECONDS = 60.0

# Levy identity: running max vs occupation local time
LEVY_KS_TWO_SAMPLE = 0.05
LEVY_KS_HALF_NORMAL = 0.03
LEVY_MEAN_STDERRS = 3.0
LEVY_MIN_REPLICAS = 100
LEVY_MAX_SECONDS = 120.0

# box-counting dimension
CANTOR_SLOPE_ATOL = 1e-6
ZERO_SET_SLOPE_BAND = (0.43, 0.57)
ZERO_SET_MIN_R2 = 0.97
NC_SLOPE_BAND = (0.40, 0.60)
NC_MIN_R2 = 0.95
BOX_MIN_COUNT = 4
NC_TOL_FACTOR = 1e-7
NC_MAX_FLAGGED_FRACTION = 0.20

# local limit at stopping times
LOCAL_ORACLE_KS = 0.03
LOCAL_SHEET_KS = 0.08
LOCAL_MIN_REPLICAS = 200
LOCAL_MIN_EFFECTIVE = 500
LOCAL_LIMIT_RATE = 4.0
LOCAL_MIN_CELLS = 64

# growth of the mean difference profile
GROWTH_SLOPE_BAND = (0.85, 1.15)
GROWTH_MIN_REPLICAS = 30
