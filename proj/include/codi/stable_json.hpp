#pragma once

#include <string>

#include <json.hpp>

namespace codi {

/// Byte-stable JSON: keys sorted, two-space indent, floats as %.17g, trailing newline.
std::string dump_stable(const nlohmann::json& value);

}  // namespace codi
