"""Convolutional SVM networks: feed-forward filter learning with linear SVMs."""

from .errors import (CsvmError, DecodeError, DegenerateLabels, EmptyClassError, InvalidArgument,
                     InvalidGeometry, InvalidInput, LayoutError, ModelFormatError)
from .layers import FilterBank, PoolSpec, conv2d, conv_output_size, pool, relu, sigmoid, tanh_paper, zero_pad
from .linsvm import PatchSet, SvmModel, decision, predict, train_l2svm
from .metrics import ConfusionCounts, MetricsReport, RocCurve, compute_metrics, confusion, roc_auc
from .net import (BlockSpec, CsvmNetwork, TrainConfig, block_forward, default_architecture, infer,
                  train_block, train_network)
from .tensor import Tensor3, flatten

__version__ = "0.1.0"
