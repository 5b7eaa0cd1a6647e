# Copyright 2026 The vertiformer Authors
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

"""Desk-scale multi-task kinodynamics transformer pipeline."""

from ._core import (
    __version__,
    closed_loop,
    evaluate,
    generate_corpus,
    generate_terrain,
    mppi_weights,
    train,
)

__all__ = [
    "__version__",
    "closed_loop",
    "evaluate",
    "generate_corpus",
    "generate_terrain",
    "mppi_weights",
    "train",
]
