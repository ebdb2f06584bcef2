"""Exact input-space geometry of piecewise-affine networks seen as max-affine spline operators."""

from .analysis import (
    code_occupancy,
    distance_distribution,
    exact_margin_2d,
    input_jacobian,
    layer_margin,
    region_centroid_radius,
)
from .arrangement import (
    Cell,
    ConvexPolygon,
    Line2D,
    Partition,
    SubdivisionStats,
    clip_halfplane,
    enumerate_partition,
    split_by_line,
    subdivision_stats,
    unit_cut_line,
)
from .bench import bench_inference
from .boundary import (
    abs_orthogonal_cos,
    boundary_angles,
    boundary_hyperplane,
    decision_boundary,
    dihedral_angle,
    partition_polynomial,
    relu_orthogonal_cos,
    unit_edge,
)
from .errors import (
    CapacityError,
    DegenerateError,
    GeometryError,
    InputError,
    PreconditionError,
    StructuralError,
    UnsupportedError,
)
from .network import (
    Activation,
    AffineMap,
    DenseLayer,
    GeneratorConfig,
    MasoLayer,
    Network,
    forward,
    lift_layer,
    random_network,
    region_affine,
    region_code,
    slice_network,
)
from .power import (
    PowerDiagram,
    laguerre_infer,
    layer_pd,
    naive_joint_infer,
    subdivided_pd,
    unit_pd,
)

__version__ = "0.1.0"
