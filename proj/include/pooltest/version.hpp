#pragma once

#include <cstdint>

namespace pooltest {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 20211015;

}  // namespace pooltest
