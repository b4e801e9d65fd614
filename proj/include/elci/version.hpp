#pragma once

namespace elci {

inline constexpr const char* kVersion = "0.1.0";

}
