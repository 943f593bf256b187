"""
Some basic constants, shared across modules
"""

APP_NAME = 'POSIKIT'
"""
Name used in logs and reports
"""
DEFAULT_RANK_TOLERANCE = 1e-10
"""
Relative singular-value cutoff: sigma_k is treated as zero if sigma_k < tol * sigma_max.
The same cutoff decides whether an adjusted predictor is degenerate
"""
DEFAULT_DEDUP_TOLERANCE = 1e-8
"""
Two unit vectors v, w are the same sign class if min(|v - w|, |v + w|) < tol
"""
DUALITY_SLACK = 10.0
"""
Tolerance multiplier for comparing directions produced by two different factorizations
"""
DRAW_BLOCK_SIZE = 1024
"""
Number of Monte-Carlo draws generated from one counter-based generator.
Must never depend on the number of threads
"""
DIRECTION_BUFFER_SIZE = 512
"""
Directions are multiplied against the draws in buffers of this size
"""
MATERIALIZE_LIMIT = 2_000_000
"""
If direction_count * d is below this value, the direction set is materialized
and the engine runs in the transposed (blocked over draws) mode
"""
LARGE_UNIVERSE_P = 16
"""
With the unrestricted universe and p above this value the CLI prints a time projection
"""
DIRECTIONS_PER_SECOND = 2e7
"""
Rough throughput (direction x draw products per second) used for time projections
"""
POLYTOPE_SLACK = 1e-12
"""
Relative slack for polytope membership, so that tangency points are contained
"""
DEFAULT_ALPHA = 0.05
DEFAULT_MC_SAMPLES = 100_000
