"""Default size caps for exact algorithms.

Every cap is overridable through the corresponding function parameter;
these are the fallbacks used when a caller passes ``None``.
"""

from __future__ import annotations

# Largest space for which a full pairwise distance matrix is materialized.
DENSE_CAP = 4096

# Exact maximum-separated-set search (branch-and-bound clique).
SEPARATED_EXACT_CAP = 64

# Exact minimal subcover / spanning search on covers that are not partitions.
# Partitions short-circuit to a linear count and are never capped.
COVER_EXACT_CAP = 256

# Exhaustive triangle-inequality verification; larger spaces get sampled
# triples instead.
TRIANGLE_EXHAUSTIVE_CAP = 512
TRIANGLE_SAMPLES = 4096

# Maximum number of points in a product or induced tuple space.
PRODUCT_SIZE_CAP = 4096

# Hard guard on join explosion for non-partition covers.
JOIN_ELEMENT_CAP = 65536

# Exhaustive modulus-of-continuity search in threshold selection.
DELTA_EXHAUSTIVE_CAP = 512
