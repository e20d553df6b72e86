// Copyright 2026 The gradcomp Authors. All Rights Reserved.
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
// =============================================================================

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gradcomp/kernels.hpp"

namespace gradcomp::kernels {

#ifndef GRADCOMP_HAVE_AVX2
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(__i386__)
      return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA not available: " + std::string(isa_name(isa)));
  }
  if (isa == Isa::kAvx2) return *detail::avx2_table();
  return scalar_table();
}

namespace {

const KernelTable* select_default() {
  if (const char* env = std::getenv("GRADCOMP_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2") return &table_for(Isa::kAvx2);
    throw std::invalid_argument("GRADCOMP_SIMD must be 'scalar' or 'avx2'");
  }
  if (isa_supported(Isa::kAvx2)) return detail::avx2_table();
  return &scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = select_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void set_active(Isa isa) { g_active.store(&table_for(isa), std::memory_order_release); }

}  // namespace gradcomp::kernels
