#pragma once

#include <string>

namespace lil {

/// Shortest decimal that reads back to the same double; "inf", "-inf", "nan" otherwise.
std::string num(double x);

}  // namespace lil
