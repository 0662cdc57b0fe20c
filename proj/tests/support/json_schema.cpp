#include "json_schema.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace testing_support {

using nlohmann::json;

namespace {

bool has_type(const json& instance, const std::string& type) {
  if (type == "null") return instance.is_null();
  if (type == "boolean") return instance.is_boolean();
  if (type == "object") return instance.is_object();
  if (type == "array") return instance.is_array();
  if (type == "string") return instance.is_string();
  if (type == "number") return instance.is_number();
  if (type == "integer") {
    if (instance.is_number_integer()) return true;
    if (!instance.is_number_float()) return false;
    const double d = instance.get<double>();
    return d == static_cast<double>(static_cast<long long>(d));
  }
  throw std::runtime_error("unknown schema type " + type);
}

std::size_t utf8_chars(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

SchemaValidator::SchemaValidator(json schema) : root_(std::move(schema)) {}

SchemaValidator SchemaValidator::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open schema " + path);
  return SchemaValidator(json::parse(in));
}

const json& SchemaValidator::resolve(const std::string& ref) const {
  if (ref.rfind("#/", 0) != 0) throw std::runtime_error("only local refs are supported: " + ref);
  return root_.at(json::json_pointer(ref.substr(1)));
}

std::vector<std::string> SchemaValidator::validate(const json& instance) const {
  std::vector<std::string> errors;
  if (check(root_, instance, "", &errors)) {
    errors.clear();
  } else if (errors.empty()) {
    errors.push_back("invalid");
  }
  return errors;
}

bool SchemaValidator::check(const json& schema, const json& instance, const std::string& path,
                            std::vector<std::string>* errors) const {
  if (schema.is_boolean()) {
    if (!schema.get<bool>() && errors) errors->push_back(path + ": schema is false");
    return schema.get<bool>();
  }
  auto fail = [&](const std::string& why) {
    if (errors) errors->push_back((path.empty() ? "/" : path) + ": " + why);
    return false;
  };

  if (auto it = schema.find("$ref"); it != schema.end()) {
    if (!check(resolve(it->get<std::string>()), instance, path, errors)) return false;
  }

  if (auto it = schema.find("type"); it != schema.end()) {
    bool ok = false;
    if (it->is_string()) {
      ok = has_type(instance, it->get<std::string>());
    } else {
      for (const auto& t : *it) ok = ok || has_type(instance, t.get<std::string>());
    }
    if (!ok) return fail("expected type " + it->dump());
  }
  if (auto it = schema.find("enum"); it != schema.end()) {
    if (std::find(it->begin(), it->end(), instance) == it->end()) return fail("not in enum " + it->dump());
  }
  if (auto it = schema.find("const"); it != schema.end()) {
    if (*it != instance) return fail("expected const " + it->dump());
  }

  if (auto it = schema.find("anyOf"); it != schema.end()) {
    bool any = false;
    for (const auto& sub : *it) {
      if (check(sub, instance, path, nullptr)) {
        any = true;
        break;
      }
    }
    if (!any) {
      // Report the branch whose type matches, which is usually the intended one.
      for (const auto& sub : *it) {
        std::vector<std::string> branch;
        check(sub, instance, path, &branch);
        if (errors && !branch.empty() && branch.front().find("expected type") == std::string::npos) {
          errors->insert(errors->end(), branch.begin(), branch.end());
          break;
        }
      }
      return fail("matches no anyOf branch");
    }
  }
  if (auto it = schema.find("allOf"); it != schema.end()) {
    for (const auto& sub : *it) {
      if (!check(sub, instance, path, errors)) return false;
    }
  }
  if (auto it = schema.find("oneOf"); it != schema.end()) {
    int matches = 0;
    for (const auto& sub : *it) matches += check(sub, instance, path, nullptr);
    if (matches != 1) return fail("matches " + std::to_string(matches) + " oneOf branches");
  }
  if (auto it = schema.find("not"); it != schema.end()) {
    if (check(*it, instance, path, nullptr)) return fail("matches a forbidden schema");
  }

  if (instance.is_number()) {
    const double v = instance.get<double>();
    if (auto it = schema.find("minimum"); it != schema.end() && v < it->get<double>()) return fail("below minimum");
    if (auto it = schema.find("maximum"); it != schema.end() && v > it->get<double>()) return fail("above maximum");
  }
  if (instance.is_string()) {
    const std::size_t n = utf8_chars(instance.get<std::string>());
    if (auto it = schema.find("minLength"); it != schema.end() && n < it->get<std::size_t>()) return fail("too short");
    if (auto it = schema.find("maxLength"); it != schema.end() && n > it->get<std::size_t>()) return fail("too long");
  }
  if (instance.is_array()) {
    if (auto it = schema.find("minItems"); it != schema.end() && instance.size() < it->get<std::size_t>()) {
      return fail("too few items");
    }
    if (auto it = schema.find("maxItems"); it != schema.end() && instance.size() > it->get<std::size_t>()) {
      return fail("too many items");
    }
    if (auto it = schema.find("items"); it != schema.end()) {
      for (std::size_t i = 0; i < instance.size(); ++i) {
        const json& sub = it->is_array() ? (i < it->size() ? (*it)[i] : json(true)) : *it;
        if (!check(sub, instance[i], path + "/" + std::to_string(i), errors)) return false;
      }
    }
  }
  if (instance.is_object()) {
    if (auto it = schema.find("minProperties"); it != schema.end() && instance.size() < it->get<std::size_t>()) {
      return fail("too few properties");
    }
    if (auto it = schema.find("required"); it != schema.end()) {
      for (const auto& key : *it) {
        if (!instance.contains(key.get<std::string>())) return fail("missing required " + key.dump());
      }
    }
    const json* props = schema.contains("properties") ? &schema.at("properties") : nullptr;
    const json* additional = schema.contains("additionalProperties") ? &schema.at("additionalProperties") : nullptr;
    for (const auto& item : instance.items()) {
      const std::string child = path + "/" + item.key();
      if (props && props->contains(item.key())) {
        if (!check(props->at(item.key()), item.value(), child, errors)) return false;
      } else if (additional) {
        if (additional->is_boolean() && !additional->get<bool>()) return fail("unexpected property '" + item.key() + "'");
        if (!check(*additional, item.value(), child, errors)) return false;
      }
    }
  }
  return true;
}

}  // namespace testing_support
