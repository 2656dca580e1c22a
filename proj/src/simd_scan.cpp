// Copyright 2026 The segcap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "segcap/simd_scan.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#endif

namespace segcap::simd {

void scan_runs_scalar(const std::uint8_t* data, std::size_t size,
                      std::vector<std::uint64_t>& runs) {
  runs.clear();
  std::size_t pos = 0;
  while (pos < size) {
    const std::uint8_t cur = data[pos];
    std::size_t next = pos + 1;
    while (next < size && data[next] == cur) ++next;
    runs.push_back(next - pos);
    pos = next;
  }
}

#if defined(__x86_64__) || defined(_M_X64)

__attribute__((target("avx2"))) void scan_runs_avx2(
    const std::uint8_t* data, std::size_t size,
    std::vector<std::uint64_t>& runs) {
  runs.clear();
  std::size_t pos = 0;
  while (pos < size) {
    const std::uint8_t cur = data[pos];
    std::size_t next = pos + 1;
    const __m256i needle = _mm256_set1_epi8(static_cast<char>(cur));
    bool found = false;
    while (!found && next + 32 <= size) {
      const __m256i chunk =
          _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + next));
      const auto eq = static_cast<std::uint32_t>(
          _mm256_movemask_epi8(_mm256_cmpeq_epi8(chunk, needle)));
      if (eq != 0xFFFFFFFFu) {
        next += static_cast<std::size_t>(__builtin_ctz(~eq));
        found = true;
      } else {
        next += 32;
      }
    }
    if (!found) {
      while (next < size && data[next] == cur) ++next;
    }
    runs.push_back(next - pos);
    pos = next;
  }
}

namespace {

using ScanFn = void (*)(const std::uint8_t*, std::size_t,
                        std::vector<std::uint64_t>&);

ScanFn resolve_scan() {
  if (__builtin_cpu_supports("avx2")) return &scan_runs_avx2;
  return &scan_runs_scalar;
}

const ScanFn g_scan = resolve_scan();

}  // namespace

void scan_runs(const std::uint8_t* data, std::size_t size,
               std::vector<std::uint64_t>& runs) {
  g_scan(data, size, runs);
}

const char* active_kernel() {
  return g_scan == &scan_runs_avx2 ? "avx2" : "scalar";
}

#else

void scan_runs(const std::uint8_t* data, std::size_t size,
               std::vector<std::uint64_t>& runs) {
  scan_runs_scalar(data, size, runs);
}

const char* active_kernel() { return "scalar"; }

#endif

}  // namespace segcap::simd
