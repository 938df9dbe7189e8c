#pragma once

// Round-trippable number formatting for reports.

#include <fmt/format.h>

#include <string>

namespace ngeo {

/// 17 significant digits; parses back to the identical double.
inline std::string num(double x) { return fmt::format("{:.17g}", x); }

}  // namespace ngeo
