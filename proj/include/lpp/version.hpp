#pragma once

namespace lpp {

inline constexpr const char* kVersion = "0.1.0";

} // namespace lpp
