// Copyright 2026 The InsPose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "inspose/losses.hpp"

namespace inspose {

LossReport total_loss(double l_cls, double l_kpf, double l_do, double l_hm,
                      bool disk_offset_enabled, bool heatmap_enabled) {
  LossReport r;
  r.l_cls = l_cls;
  r.l_kpf = l_kpf;
  r.l_do = disk_offset_enabled ? l_do : 0.0;
  r.l_hm = heatmap_enabled ? l_hm : 0.0;
  r.total = r.l_cls + r.l_kpf + r.l_do + r.l_hm;
  return r;
}

}  // namespace inspose
