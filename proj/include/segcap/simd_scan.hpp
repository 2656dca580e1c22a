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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace segcap::simd {

// Splits a byte buffer into maximal runs of equal values and appends the run
// lengths to `runs`. Adjacent runs always differ in value, so for a 0/1
// buffer the run values alternate starting with buffer[0].
//
// scan_runs() dispatches to the widest kernel the CPU supports at runtime;
// the scalar kernel is the reference all variants are equivalence-tested
// against.
void scan_runs(const std::uint8_t* data, std::size_t size,
               std::vector<std::uint64_t>& runs);

void scan_runs_scalar(const std::uint8_t* data, std::size_t size,
                      std::vector<std::uint64_t>& runs);

#if defined(__x86_64__) || defined(_M_X64)
void scan_runs_avx2(const std::uint8_t* data, std::size_t size,
                    std::vector<std::uint64_t>& runs);
#endif

// Name of the kernel scan_runs() resolves to ("scalar" or "avx2").
const char* active_kernel();

}  // namespace segcap::simd
