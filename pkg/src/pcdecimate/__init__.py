"""Point-cloud decimation over a cubic bucket grid, with reference filters and a benchmark CLI."""

from .baseline import (
    brute_force_decimate,
    brute_force_neighbor_count,
    brute_force_neighbor_counts,
    voxel_centroid_filter,
)
from .cloud import Aabb, as_cloud, compute_aabb, crop_z, distance, transform_rigid
from .decimate import (
    FilterConfig,
    FilterStats,
    count_neighbors,
    decimate,
    mark_pass,
    neighbor_counts,
    select_random_marked,
)
from .grid import (
    GridParams,
    NormalizationRecord,
    SubdivTable,
    bucket_key,
    bucket_keys,
    bucket_range,
    build_subdiv_table,
    neighbor_buckets,
    normalize,
)
from .pcd import read_pcd, write_pcd
from .radix import radix_sort_pairs
from .scenes import SceneSpec, gen_synthetic

__version__ = "0.1.0"
