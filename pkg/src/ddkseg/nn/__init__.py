"""Dense tensor kernels with hand-written forward/backward passes.

Only the pieces the two segmenter architectures need: 1-D convolution,
batch normalization, leaky ReLU, dropout, a bidirectional LSTM layer,
fully-connected layers, softmax cross-entropy, the Adam optimizer, and a
finite-difference gradient checker.
"""

from .adam import AdamState, adam_step, init_adam
from .gradcheck import grad_check
from .layers import BatchNorm1d, Conv1d, Dropout, Layer, LeakyReLU, Linear, Sequential
from .loss import softmax_cross_entropy, softmax_probs
from .lstm import BiLSTM
from .ops import sigmoid

__all__ = [
    "AdamState", "adam_step", "init_adam", "grad_check",
    "BatchNorm1d", "Conv1d", "Dropout", "Layer", "LeakyReLU", "Linear", "Sequential",
    "softmax_cross_entropy", "softmax_probs", "BiLSTM", "sigmoid",
]
