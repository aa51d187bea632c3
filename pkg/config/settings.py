"""
Configuration settings for training, theory checks and evaluation.
"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


class Config:
    """Process-wide defaults; every value can be overridden from the environment."""

    # ===========================================
    # NORMALIZATION CONFIGURATION
    # ===========================================

    # Stabilizer inside the L2 norm: sqrt(sum x^2 + eps)
    NORM_EPSILON = float(os.getenv("NORM_EPSILON", "1e-12"))

    # ===========================================
    # LOSS CONFIGURATION
    # ===========================================

    # Scale s used when it is not learned
    FIXED_SCALE = float(os.getenv("FIXED_SCALE", "30"))
    # Starting value of s when it is learned by back-propagation
    INITIAL_LEARNED_SCALE = float(os.getenv("INITIAL_LEARNED_SCALE", "10"))
    SCALE_FLOOR = float(os.getenv("SCALE_FLOOR", "1e-3"))

    # Margins
    CONTRASTIVE_MARGIN = float(os.getenv("CONTRASTIVE_MARGIN", "1.0"))
    TRIPLET_MARGIN = float(os.getenv("TRIPLET_MARGIN", "0.8"))

    # Loss weight of the second term in a combination
    COMBO_WEIGHT = float(os.getenv("COMBO_WEIGHT", "0.01"))
    SWEEP_WEIGHTS = [float(v) for v in os.getenv("SWEEP_WEIGHTS", "0.001,0.01,0.1,1").split(",")]
    SWEEP_PAIRS = int(os.getenv("SWEEP_PAIRS", "1000"))

    # ===========================================
    # TRAINING CONFIGURATION
    # ===========================================

    LEARNING_RATE = float(os.getenv("LEARNING_RATE", "1e-3"))
    MOMENTUM = float(os.getenv("MOMENTUM", "0.9"))
    WEIGHT_DECAY = float(os.getenv("WEIGHT_DECAY", "5e-4"))
    BATCH_SIZE = int(os.getenv("BATCH_SIZE", "256"))
    ITERATIONS = int(os.getenv("ITERATIONS", "2000"))
    SNAPSHOT_EVERY = int(os.getenv("SNAPSHOT_EVERY", "1000"))
    SNAPSHOT_COUNT = int(os.getenv("SNAPSHOT_COUNT", "5"))
    TRACKER_DECAY = float(os.getenv("TRACKER_DECAY", "0.99"))
    LOG_EVERY = int(os.getenv("LOG_EVERY", "100"))
    DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "7"))

    # ===========================================
    # GRADIENT CHECK CONFIGURATION
    # ===========================================

    FD_STEP = float(os.getenv("FD_STEP", "1e-6"))
    GRAD_RTOL = float(os.getenv("GRAD_RTOL", "1e-5"))
    # Hinge arguments closer than this to zero are resampled
    KINK_EXCLUSION = float(os.getenv("KINK_EXCLUSION", "1e-3"))

    # ===========================================
    # EVALUATION CONFIGURATION
    # ===========================================

    KFOLD_SPLITS = int(os.getenv("KFOLD_SPLITS", "10"))
    FAR_TARGETS = [float(v) for v in os.getenv("FAR_TARGETS", "0.001,0.01").split(",")]
    HISTOGRAM_BINS = int(os.getenv("HISTOGRAM_BINS", "100"))
    SVM_C = float(os.getenv("SVM_C", "1.0"))
    SVM_TOLERANCE = float(os.getenv("SVM_TOLERANCE", "1e-5"))
    SVM_MAX_ITER = int(os.getenv("SVM_MAX_ITER", "100000"))

    # ===========================================
    # OUTPUT CONFIGURATION
    # ===========================================

    OUTPUT_DIR = os.getenv("OUTPUT_DIR", "output")

    # ===========================================
    # LOGGING CONFIGURATION
    # ===========================================

    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_DIR = os.getenv("LOG_DIR", "logs")
    LOG_TO_FILE = _env_bool("LOG_TO_FILE", "true")

    # ===========================================
    # UTILITY METHODS
    # ===========================================

    @classmethod
    def default_margin(cls, kind_name: str) -> float:
        """Recommended margin for a metric-style loss kind."""
        if kind_name == "c_contrastive":
            return cls.CONTRASTIVE_MARGIN
        return cls.TRIPLET_MARGIN


# Global config instance
config = Config()
