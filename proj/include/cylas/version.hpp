// SPDX-License-Identifier: MIT
#pragma once

namespace cylas {

inline constexpr const char* version = "0.1.0";

} // namespace cylas
