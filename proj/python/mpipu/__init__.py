# Copyright 2026 The mpipu Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Models of multi-cycle FP16 inner product units and the tiles built from them.

FP16 operands travel as uint16 bit patterns; ``as_fp16_bits`` converts
float arrays.
"""

import numpy as np

from ._mpipu import (
    ConfigError,
    IoError,
    NumericError,
    __version__,
    decode_fp16,
    exact_ip,
    fp_ip,
    int_ip,
    precision_sweep,
    run_experiment,
    schedule,
    simulate_layer,
)

__all__ = [
    "ConfigError",
    "IoError",
    "NumericError",
    "__version__",
    "as_fp16_bits",
    "decode_fp16",
    "exact_ip",
    "fp_ip",
    "int_ip",
    "precision_sweep",
    "run_experiment",
    "schedule",
    "simulate_layer",
]


def as_fp16_bits(x):
    """Round to float16 (nearest even) and return the bit patterns."""
    return np.asarray(x, dtype=np.float16).view(np.uint16)
