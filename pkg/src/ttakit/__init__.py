"""ttakit: adapt a trained classifier to shifted test batches at inference
time by minimizing augmentation-consistency plus entropy over a few SGD
steps, with the augmentation samplers, corruption synthesizer and
experiment harness needed to study the method at desk scale.
"""

from . import augment, corruptions, data, engine, harness, losses, models
from .adapt import AdaptationConfig, AdaptationReport, adapt_batch, run_stream, tent_baseline
from .augment import AugmentationPolicy, apply_op, augmix, rand_augment, sample_pair
from .checkpoint import load_checkpoint, save_checkpoint
from .corruptions import CorruptionSpec, build_corrupted_set, corrupt
from .engine import Tensor
from .losses import consistency_loss, entropy, kl_divergence, total_loss
from .models import build_model, predict
from .rng import SeededRng

__version__ = "0.1.0"

__all__ = [
    "AdaptationConfig", "AdaptationReport", "adapt_batch", "run_stream",
    "tent_baseline", "AugmentationPolicy", "apply_op", "rand_augment",
    "augmix", "sample_pair", "CorruptionSpec", "corrupt", "build_corrupted_set",
    "Tensor", "SeededRng", "build_model", "predict", "save_checkpoint",
    "load_checkpoint", "kl_divergence", "consistency_loss", "entropy",
    "total_loss", "engine", "models", "losses", "augment", "corruptions",
    "data", "harness", "__version__",
]
