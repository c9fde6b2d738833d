#include "belief_tuner/network_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace belief_tuner {
namespace {

using ordered_json = nlohmann::ordered_json;

// Shape errors carry offset 0: the JSON was valid, the document was not.
[[noreturn]] void shape_error(const std::string& msg) { throw ParseError(msg, 0); }

void require_fields(const ordered_json& obj, std::initializer_list<const char*> fields,
                    const std::string& where) {
  if (!obj.is_object()) shape_error(where + " must be an object");
  for (const char* f : fields) {
    if (!obj.contains(f)) shape_error(where + " is missing field '" + f + "'");
  }
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* f : fields) known = known || item.key() == f;
    if (!known) shape_error(where + " has unknown field '" + item.key() + "'");
  }
}

std::vector<std::string> string_list(const ordered_json& j, const std::string& where) {
  if (!j.is_array()) shape_error(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) shape_error(where + " must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

}  // namespace

Network parse_network(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed network document: ") + e.what(), e.byte);
  }
  require_fields(doc, {"variables"}, "network document");
  const auto& vars = doc["variables"];
  if (!vars.is_array()) shape_error("'variables' must be an array");

  std::vector<Variable> variables;
  std::vector<CptTable> cpts;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const auto& jv = vars[i];
    const std::string where = "variable " + std::to_string(i);
    require_fields(jv, {"name", "states", "parents", "cpt"}, where);
    if (!jv["name"].is_string()) shape_error(where + ": 'name' must be a string");
    Variable v;
    v.name = jv["name"].get<std::string>();
    const std::string named = "variable '" + v.name + "'";
    v.states = string_list(jv["states"], named + ": 'states'");
    v.parents = string_list(jv["parents"], named + ": 'parents'");

    const auto& rows = jv["cpt"];
    if (!rows.is_array()) shape_error(named + ": 'cpt' must be an array of rows");
    const std::size_t width = v.states.size();
    CptTable t(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (!row.is_array() || row.size() != width) {
        throw ValidationError(named + ": cpt row " + std::to_string(r) + " must have " +
                              std::to_string(width) + " entries");
      }
      for (std::size_t c = 0; c < width; ++c) {
        if (!row[c].is_number()) {
          shape_error(named + ": cpt row " + std::to_string(r) + " holds a non-number");
        }
        t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
      }
    }
    variables.push_back(std::move(v));
    cpts.push_back(std::move(t));
  }
  return Network::create(std::move(variables), std::move(cpts));
}

std::string serialize_network(const Network& n) {
  ordered_json vars = ordered_json::array();
  for (std::size_t v = 0; v < n.size(); ++v) {
    const Variable& var = n.variable(v);
    ordered_json jv;
    jv["name"] = var.name;
    jv["states"] = var.states;
    jv["parents"] = var.parents;
    ordered_json rows = ordered_json::array();
    const CptTable& t = n.cpt(v);
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
      rows.push_back(std::move(row));
    }
    jv["cpt"] = std::move(rows);
    vars.push_back(std::move(jv));
  }
  ordered_json doc;
  doc["variables"] = std::move(vars);
  return doc.dump(2) + "\n";
}

Network read_network_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open network file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

}  // namespace belief_tuner
