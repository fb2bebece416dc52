#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace funcda {

// 64-bit FNV-1a. The seed is folded into the offset basis so distinct
// seeds define distinct hash families.
inline uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0) {
  uint64_t h = 14695981039346656037ull ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(uint64_t v);

}  // namespace funcda
