"""Zero-data low-light image enhancement via noise self-regression.

Train a ~1.3K-parameter convolutional network to reproduce Gaussian noise,
then run arbitrary images through it: instance normalization remediates
the overall lighting while the self-regression preserves local contrast.
"""

from .colors import central_grey, opposite_color, predict_mapping, verify_mapping
from .data import NoiseSpec, palette_image, pure_color_image, sample_noise
from .enhance import denormalize, enhance, enhance_dir, load_image, normalize, save_image
from .metrics import channel_means, color_constancy, grey_distance, psnr, ssim
from .model import (
    CheckpointError,
    SrmParams,
    param_count,
    srm_backward,
    srm_forward,
    srm_load,
    srm_new,
    srm_save,
)
from .training import (
    CurveLog,
    TrainConfig,
    TrainingError,
    train,
    train_c_regression,
    train_on_noise,
    train_p_regression,
)

__version__ = "0.1.0"
