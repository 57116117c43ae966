"""Cervigram preprocessing: harmonic specular-highlight removal and K-means cervix ROI extraction."""

from .color import LabColor, LabImage, delta_ab, rgb_to_lab_image, srgb_to_lab
from .imagecore import BBox, crop, load_image, merge_planes, save_image, split_planes
from .inpaint import (
    FundamentalSolutionParams,
    PoissonRhs,
    SolverConfig,
    SolveStats,
    discrete_laplacian,
    fundamental_solution,
    inpaint_image,
    inpaint_plane,
    verify_radial_harmonicity,
)
from .kmeans import ClusterModel, KmeansConfig, assign_nearest, kmeans, update_means
from .phantom import PhantomSpec, PhantomTruth, generate_phantom
from .pipeline import PipelineConfig, PipelineError, run_batch, run_pipeline
from .roi import (
    ComponentLabeling,
    RoiResult,
    bbox_with_margin,
    connected_components,
    largest_component,
    select_cervix_cluster,
)
from .specular import SpecularConfig, StructuringElement, detect_specular, dilate, mask_boundary

__version__ = "0.1.0"
