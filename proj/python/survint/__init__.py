# Copyright 2026 The survint Authors.
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

"""Python interface to the survint C++ core."""

try:
    from ._survint import *  # noqa: F401,F403
    from ._survint import __version__
except ImportError:
    from _survint import *  # noqa: F401,F403
    from _survint import __version__

__all__ = [
    "DataError",
    "NumericalError",
    "UsageError",
    "adjusted_weights",
    "binary_log_posterior",
    "effective_sample_size",
    "estimate_propensity",
    "fit",
    "generate_population",
    "location_discount_mean",
    "nps_weights",
    "predict_mean",
    "summarize",
]
