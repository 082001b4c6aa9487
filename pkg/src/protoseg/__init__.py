"""Post-processing and loss mathematics for prototype-based real-time
instance segmentation: mask assembly, fast suppression, box codec,
training losses with analytic mask gradients, and COCO-style AP.
"""

from .errors import ConfigError, DimensionError, FormatError, ProtosegError
from .geometry import (
    AnchorConfig,
    AnchorSet,
    decode_boxes,
    encode_boxes,
    generate_anchors,
    iou,
    pairwise_iou,
)
from .maskops import (
    CoefficientMatrix,
    PrototypeStack,
    SoftMaskSet,
    assemble_masks,
    binarize,
    crop_mask,
    mask_iou,
    resize_bilinear,
    rle_decode,
    rle_encode,
)
from .nms import NmsConfig, fast_nms, traditional_nms
from .losses import LossWeights, MatchResult, match_anchors, mask_loss
from .detections import DetectionSet
from .rescore import ConstantOne, IouPredictor, OracleGtIou, rescore_detections
from .evaluation import ApReport, evaluate_ap
from .config import PipelineConfig, load_config, parse_config
from .pipeline import ImageDump, load_image_dump, run_postprocess
from .tensorfile import read_tensor, write_tensor

__version__ = "0.1.0"

__all__ = [
    "AnchorConfig",
    "AnchorSet",
    "ApReport",
    "CoefficientMatrix",
    "ConfigError",
    "ConstantOne",
    "DetectionSet",
    "DimensionError",
    "FormatError",
    "ImageDump",
    "IouPredictor",
    "LossWeights",
    "MatchResult",
    "NmsConfig",
    "OracleGtIou",
    "PipelineConfig",
    "ProtosegError",
    "PrototypeStack",
    "SoftMaskSet",
    "assemble_masks",
    "binarize",
    "crop_mask",
    "decode_boxes",
    "encode_boxes",
    "evaluate_ap",
    "fast_nms",
    "generate_anchors",
    "iou",
    "load_config",
    "load_image_dump",
    "mask_iou",
    "mask_loss",
    "match_anchors",
    "pairwise_iou",
    "parse_config",
    "read_tensor",
    "rescore_detections",
    "resize_bilinear",
    "rle_decode",
    "rle_encode",
    "run_postprocess",
    "traditional_nms",
    "write_tensor",
    "__version__",
]
