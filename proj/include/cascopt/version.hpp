#pragma once

namespace cascopt {
inline constexpr const char* version = "0.1.0";
}  // namespace cascopt
