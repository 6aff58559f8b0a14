"""Mobile video super-resolution: x4 upscaling of 10-frame clips on CPU.

Arrays are float32 NHWC. A clip of F frames is packed as [1, H, W, 3F].
"""

from ._core import (
    BadMagicError,
    DuplicateNameError,
    Error,
    FormatError,
    IoError,
    Model,
    NoFramesError,
    NumericError,
    ShapeError,
    TruncatedError,
    UnsupportedDtypeError,
    UnsupportedVersionError,
    ValueError,
    WeightError,
    archs,
    challenge_table,
    conv2d,
    degrade,
    depth_to_space,
    final_score,
    fit_c,
    fuse_weights,
    init_weights,
    load_clip,
    load_weights,
    pack_frames,
    param_count,
    psnr,
    resize_bicubic,
    resize_bilinear,
    save_clip,
    save_weights,
    space_to_depth,
    ssim,
    synthetic_clip,
    unpack_frames,
    zero_weights,
)

__version__ = "0.1.0"
