"""Fully parameterizable convolutional network engine.

Convolution with skipping factors, max-pooling with argmax gradient
routing, partial inter-map connection tables, pulling-delta
backpropagation with a pushing oracle, online gradient descent with
deformation augmentation, and finite-difference gradient verification.
"""

from .arch import parse_architecture, parse_experiment
from .augment import (DeformationConfig, DeformationParams, affine_deform,
                      deform_channels, elastic_deform, sample_params)
from .backprop import (adjust_weights, conv_weight_gradients, output_deltas,
                       pool_backward, pull_deltas_conv, pull_range,
                       push_deltas_conv)
from .bench import BenchReport, bench
from .datasets import (Dataset, Sample, from_bytes, load_cifar10, load_idx,
                       load_norb, normalize, write_idx)
from .errors import (ConfigError, ConvkitError, DataFormatError,
                     DimensionError, GeometryError, GeometryWarning,
                     PrecisionError, StateError)
from .filters import (FixedFilterBank, apply_image_processing,
                      default_bank, make_contrast_filters)
from .gradcheck import GradReport, check_network, finite_diff
from .layers import (KernelBank, PoolIndex, activation, activation_deriv,
                     conv_forward, fc_forward, maxpool_forward,
                     maxpool_forward_stack)
from .network import NetworkState
from .precision import get_precision, set_precision, use_precision
from .tensor import (FeatureMap, MapStack, from_array, map_equal, new_map,
                     new_stack, stack_from_array)
from .topology import (ConnectionTable, LayerSpec, NetworkSpec,
                       build_full_table, build_random_table, invert_table,
                       output_map_size)
from .training import (ExperimentSummary, RunRecord, TrainConfig, evaluate,
                       init_weights, lr_at_epoch, mnist_decay, run_experiment,
                       run_training, targets_for, train_epoch)

__version__ = "0.1.0"
