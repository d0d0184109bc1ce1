#pragma once

namespace fit {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kCsvSchemaVersion = "1";

} // namespace fit
