#pragma once

#include <string>
#include <string_view>

namespace gial {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

/// Parses the whole of `text` as a double; false on any leftover characters.
bool parse_double(std::string_view text, double& out);

}  // namespace gial
