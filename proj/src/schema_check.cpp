#include <string>
#include <vector>

#include "flatlim/expcli.hpp"

namespace flatlim {

namespace {

using nlohmann::json;

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

void check(const json& v, const json& s, const std::string& path, std::vector<std::string>& out) {
  const std::string where = path.empty() ? "<root>" : path;
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) ok = ok || has_type(v, t.get<std::string>());
    } else {
      ok = has_type(v, s["type"].get<std::string>());
    }
    if (!ok) {
      out.push_back(where + ": expected type " + s["type"].dump());
      return;
    }
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) out.push_back(where + ": value " + v.dump() + " not in " + s["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>())
      out.push_back(where + ": below minimum " + s["minimum"].dump());
    if (s.contains("maximum") && x > s["maximum"].get<double>())
      out.push_back(where + ": above maximum " + s["maximum"].dump());
    if (s.contains("exclusiveMinimum") && !(x > s["exclusiveMinimum"].get<double>()))
      out.push_back(where + ": must exceed " + s["exclusiveMinimum"].dump());
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
      out.push_back(where + ": fewer than " + s["minItems"].dump() + " items");
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>())
      out.push_back(where + ": more than " + s["maxItems"].dump() + " items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i)
        check(v[i], s["items"], path + "[" + std::to_string(i) + "]", out);
  }
  if (v.is_object()) {
    if (s.contains("required"))
      for (const auto& r : s["required"])
        if (!v.contains(r.get<std::string>())) out.push_back(where + ": missing required key " + r.dump());
    const json props = s.value("properties", json::object());
    const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
    for (const auto& [key, val] : v.items()) {
      const std::string sub = path.empty() ? key : path + "." + key;
      if (props.contains(key))
        check(val, props[key], sub, out);
      else if (closed)
        out.push_back(sub + ": unknown key");
    }
  }
}

}  // namespace

std::vector<std::string> schema_violations(const json& doc, const json& schema) {
  std::vector<std::string> out;
  check(doc, schema, "", out);
  return out;
}

}  // namespace flatlim
