# Copyright 2026 The InsPose Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""InsPose: single-stage multi-person pose estimation with instance-aware KP-Nets."""

from ._inspose import (
    ConfigError,
    Error,
    GeometryError,
    ParseError,
    Predictor,
    coco_kappas,
    decode_keypoints,
    default_device,
    evaluate,
    export_synthetic,
    generate_scene,
    keypoint_nms,
    kpnet_param_count,
    load_config,
    oks,
    train,
)

__all__ = [
    "ConfigError",
    "Error",
    "GeometryError",
    "ParseError",
    "Predictor",
    "coco_kappas",
    "decode_keypoints",
    "default_device",
    "evaluate",
    "export_synthetic",
    "generate_scene",
    "keypoint_nms",
    "kpnet_param_count",
    "load_config",
    "oks",
    "train",
]
