"""Feature-preserving, uniformity-controllable point cloud simplification on k-NN graphs."""

from graphsimp.core import PointCloud, RigidTransform, SelectionMask, apply_transform, rmse, select
from graphsimp.graph import KnnGraph, binary_adjacency, build_knn_graph, laplacian_apply
from graphsimp.objective import (
    SimplificationProblem,
    feature_loss,
    feature_vector,
    gradient,
    total_loss,
    uniformity_loss,
)
from graphsimp.solver import (
    ResampleSolution,
    SolverConfig,
    project_capped_simplex,
    select_top,
    solve_relaxed,
)
from graphsimp.partition import (
    CubePartition,
    CubeProblem,
    SimplifyParams,
    allocate_budgets,
    build_cube_problems,
    build_partition,
    simplify,
)
from graphsimp.baseline import contour_only, uniform_voxel
from graphsimp.registration import IcpConfig, best_rigid_transform, icp, registration_experiment

__version__ = "0.1.0"
