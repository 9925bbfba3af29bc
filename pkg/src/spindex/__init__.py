"""Dynamic shortest-distance indexes for road networks.

Staged index maintenance (graph search -> shortcut search -> hub labels)
over one or many tree decompositions, plus a batch-update / Poisson-query
throughput model and a CLI.
"""

from .graphs import (RoadNetwork, UNREACHABLE, EdgeUpdate, UpdateBatch,
                     load_dimacs, save_dimacs, dijkstra_sssp, bidijkstra,
                     apply_updates, generate_update_batch,
                     generate_query_workload, random_network, grid_network)
from .treedec import (VertexOrder, TreeDecomposition, mde_decompose,
                      validate_decomposition, save_snapshot, load_snapshot)
from .hierarchy import (MHLIndex, build_mhl, canonicalize,
                        STAGE_EDGES, STAGE_SHORTCUTS, STAGE_LABELS)
from .partition import (Partitioning, partition_graph, boundary_first_order,
                        classify_updates, td_partition, TDPartitionResult)
from .pmhl import (PMHLIndex, pmhl_build, pmhl_query, pmhl_update,
                   tree_aggregation, cross_update_frontier, flat_labels)
from .postmhl import (PostMHLIndex, postmhl_build, postmhl_query,
                      postmhl_update, verify_boundary_arrays)
from .simulate import (WorkloadConfig, SimulationTrace, ThroughputReport,
                       analytic_bound, simulate, measure_max_throughput,
                       calibrate_engine, SyntheticEngine)
from .engines import make_engine, ENGINE_KINDS

__version__ = "0.1.0"

__all__ = [
    "RoadNetwork", "UNREACHABLE", "EdgeUpdate", "UpdateBatch",
    "load_dimacs", "save_dimacs", "dijkstra_sssp", "bidijkstra",
    "apply_updates", "generate_update_batch", "generate_query_workload",
    "random_network", "grid_network",
    "VertexOrder", "TreeDecomposition", "mde_decompose",
    "validate_decomposition", "save_snapshot", "load_snapshot",
    "MHLIndex", "build_mhl", "canonicalize",
    "STAGE_EDGES", "STAGE_SHORTCUTS", "STAGE_LABELS",
    "Partitioning", "partition_graph", "boundary_first_order",
    "classify_updates", "td_partition", "TDPartitionResult",
    "PMHLIndex", "pmhl_build", "pmhl_query", "pmhl_update",
    "tree_aggregation", "cross_update_frontier", "flat_labels",
    "PostMHLIndex", "postmhl_build", "postmhl_query", "postmhl_update",
    "verify_boundary_arrays",
    "WorkloadConfig", "SimulationTrace", "ThroughputReport",
    "analytic_bound", "simulate", "measure_max_throughput",
    "calibrate_engine", "SyntheticEngine",
    "make_engine", "ENGINE_KINDS",
]
