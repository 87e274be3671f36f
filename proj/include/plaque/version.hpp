#pragma once

namespace plaque {
inline constexpr const char* version = "1.0.0";
}
