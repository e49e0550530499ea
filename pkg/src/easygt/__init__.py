"""easygt: threshold-based WBC nucleus segmentation with a human-in-the-loop annotation workflow."""

from .errors import (
    DecodeError,
    DegenerateChannel,
    DegenerateHistogram,
    EasyGtError,
    EmptyDataset,
    EmptySession,
    InvalidAlpha,
    InvalidSpec,
    IoError,
    NotFound,
    ShapeMismatch,
)
from .image import (
    CmykImage,
    GrayImage,
    RgbImage,
    color_balance,
    extract_m_channel,
    load_image,
    rgb_to_cmyk,
    save_image,
    to_grayscale,
)
from .masks import load_mask, mask_to_png_bytes, save_mask
from .metrics import (
    ConfusionCounts,
    EvalResult,
    SweepReport,
    SweepRow,
    alpha_grid,
    alpha_sweep,
    compare_masks,
    confusion_counts,
    evaluate,
)
from .phantom import PhantomSpec, default_suite, generate_phantom
from .session import AnnotationRecord, Session, SessionView, open_session
from .thresholding import (
    BinaryMask,
    Histogram,
    ThresholdSet,
    apply_threshold,
    build_histogram,
    combine_thresholds,
    magenta_channel,
    otsu_three_class,
    otsu_two_class,
    segment,
    thresholds_from,
)

__version__ = "0.1.0"
