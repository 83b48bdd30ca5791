"""Learnable power-normalized motion prompts for video clips."""

from .errors import DomainError, InsufficientFramesError, ShapeMismatchError, TrainingDiverged
from .framediff import diff_maps, frame_differencing, to_grayscale
from .gradients import finite_difference, loss_gradients, pn_partial_hyper, pn_partial_m, pn_partial_n
from .pn import (
    PnHyper,
    PnParams,
    apply_pn,
    classic_pn,
    constraint_check,
    invert_slope,
    shift,
    slope,
    slope_bounds,
)
from .prompts import attention_sequence, motion_prompts
from .regularization import temporal_variation, total_loss

__version__ = "0.1.0"
