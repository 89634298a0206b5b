#pragma once

namespace chromaforge {

inline constexpr const char* kToolVersion = "0.1.0";

} // namespace chromaforge
