#include "codi/stable_json.hpp"

#include <cmath>
#include <cstdio>

#include "codi/errors.hpp"

namespace codi {
namespace {

void append_indent(std::string& out, int depth) { out.append(static_cast<std::size_t>(depth) * 2, ' '); }

void append_float(std::string& out, double v) {
  if (!std::isfinite(v)) throw ValidationError("cannot serialize non-finite number to JSON");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void emit(std::string& out, const nlohmann::json& v, int depth) {
  using value_t = nlohmann::json::value_t;
  switch (v.type()) {
    case value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      // nlohmann::json objects are std::map-backed, so iteration is key-sorted.
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        append_indent(out, depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        emit(out, it.value(), depth + 1);
      }
      out += "\n";
      append_indent(out, depth);
      out += "}";
      return;
    }
    case value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (k > 0) out += ",\n";
        append_indent(out, depth + 1);
        emit(out, v[k], depth + 1);
      }
      out += "\n";
      append_indent(out, depth);
      out += "]";
      return;
    }
    case value_t::number_float:
      append_float(out, v.get<double>());
      return;
    default:
      out += v.dump();
      return;
  }
}

}  // namespace

std::string dump_stable(const nlohmann::json& value) {
  std::string out;
  emit(out, value, 0);
  out += "\n";
  return out;
}

}  // namespace codi
