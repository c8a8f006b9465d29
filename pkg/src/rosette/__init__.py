"""rosette: deterministic synthetic rosette-plant datasets with pixel-exact
leaf instance labels, plus a symmetric-best-dice evaluation toolkit."""

from .camera import Camera, Light, sample_camera, sample_light
from .config import ConfigError, GenerationConfig, load_config, save_config
from .dataset import (DatasetManifest, LeafRecord, SampleRecord,
                      export_annotations, load_background_bank, mix_manifests,
                      read_label_map, read_manifest, split_manifest,
                      write_manifest, write_sample)
from .leaf import (LeafDeformParams, build_leaf_template, deform_leaf,
                   leaf_local_to_world, load_leaf_template)
from .mesh import MeshError, TriangleMesh, load_mesh, save_mesh
from .metrics import (EvaluationError, SBDReport, best_dice, dice,
                      diff_in_count, evaluate_directory, symmetric_best_dice)
from .pipeline import generate_dataset, generate_image, load_assets
from .plant import (LeafInstance, PlantModel, assemble_plant,
                    sample_leaf_count, sample_leaf_pose)
from .render import (FrameBuffer, composite_over_background, gaussian_blur,
                     rasterize_labels, rasterize_rgb, render_plant)
from .rng import RandomSource, derive_image_seed, sample_normal, sample_uniform
from .stats import (CentroidHeatmap, CountHistogram, centroid_heatmap,
                    leaf_count_histogram)
from .textures import (BankError, TextureImage, TextureMode, assign_textures,
                       augment_image, load_bank)

__version__ = "0.1.0"
