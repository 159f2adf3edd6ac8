/* Copyright 2026 The nvtx Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Writes the frozen golden-logits file. Run once; the output lives in
// tests/data and is never regenerated by the build.

#include <cstdio>

#include "fixtures.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <out>\n", argv[0]);
    return 2;
  }
  const nvtx::ModelWeights w = nvtx::init_model(fixture::golden_config(), fixture::kGoldenSeed);
  const nvtx::Matrix logits = nvtx::forward_standard(w, fixture::kGoldenSrc, fixture::kGoldenTgt);
  std::FILE* f = std::fopen(argv[1], "w");
  if (!f) return 3;
  std::fprintf(f, "%zu %zu\n", logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r)
    for (std::size_t c = 0; c < logits.cols(); ++c)
      std::fprintf(f, "%.17g%c", logits(r, c), c + 1 == logits.cols() ? '\n' : ' ');
  std::fclose(f);
  return 0;
}
