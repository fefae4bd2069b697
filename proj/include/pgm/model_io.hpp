#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pgm/common.hpp"
#include "pgm/graph.hpp"
#include "pgm/params.hpp"

namespace pgm {

// Plain-text model document, format_version 1.  Emission is canonical
// (name-sorted keys, shortest round-trip reals), so emit(load(emit(m)))
// reproduces the same bytes.
inline std::string emit_model(const BayesianNetwork& bn) {
  bn.validate();
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["variables"] = nlohmann::ordered_json::array();
  for (const auto& v : bn.variables) {
    nlohmann::ordered_json jv;
    jv["name"] = v.name;
    jv["kind"] = v.kind == VarKind::discrete ? "discrete" : "continuous";
    if (v.kind == VarKind::discrete) jv["levels"] = v.levels;
    j["variables"].push_back(jv);
  }
  j["arcs"] = nlohmann::ordered_json::array();
  for (const auto& e : bn.dag.edges()) j["arcs"].push_back({e.tail, e.head});
  j["locals"] = nlohmann::ordered_json::object();
  for (int v = 0; v < bn.dag.size(); ++v) {
    nlohmann::ordered_json jl;
    if (bn.discrete()) {
      const Cpt& c = bn.cpt(v);
      jl["parents"] = c.parents;
      auto rows = nlohmann::ordered_json::array();
      for (long long r = 0; r < c.rows(); ++r) {
        auto row = nlohmann::ordered_json::array();
        for (int k = 0; k < c.cardinality; ++k) row.push_back(c.at(r, k));
        rows.push_back(row);
      }
      jl["rows"] = rows;
    } else {
      const GaussianLocal& gl = bn.gaussian(v);
      jl["parents"] = gl.parents;
      jl["intercept"] = gl.intercept;
      jl["coefficients"] = gl.coefficients;
      jl["residual_variance"] = gl.residual_variance;
    }
    j["locals"][bn.dag.name(v)] = jl;
  }
  return j.dump(2) + "\n";
}

inline BayesianNetwork load_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
      throw IngestError("unsupported or missing format_version");
    BayesianNetwork bn;
    std::vector<std::string> names;
    for (const auto& jv : j.at("variables")) {
      VariableMeta v;
      v.name = jv.at("name").get<std::string>();
      const std::string kind = jv.at("kind").get<std::string>();
      if (kind == "discrete") {
        v.kind = VarKind::discrete;
        v.levels = jv.at("levels").get<std::vector<std::string>>();
        if (v.levels.size() < 2) throw IngestError("variable '" + v.name + "' has fewer than two levels");
      } else if (kind == "continuous") {
        v.kind = VarKind::continuous;
      } else {
        throw IngestError("variable '" + v.name + "' has unknown kind '" + kind + "'");
      }
      bn.variables.push_back(std::move(v));
      names.push_back(bn.variables.back().name);
    }
    std::sort(bn.variables.begin(), bn.variables.end(),
              [](const VariableMeta& a, const VariableMeta& b) { return a.name < b.name; });
    std::vector<std::pair<std::string, std::string>> arcs;
    for (const auto& ja : j.at("arcs")) {
      if (!ja.is_array() || ja.size() != 2) throw IngestError("arcs must be [tail, head] pairs");
      arcs.emplace_back(ja[0].get<std::string>(), ja[1].get<std::string>());
    }
    bn.dag = Dag(names, arcs);
    const auto& jlocals = j.at("locals");
    for (int v = 0; v < bn.dag.size(); ++v) {
      const std::string& nm = bn.dag.name(v);
      if (!jlocals.contains(nm)) throw IngestError("missing local distribution for '" + nm + "'");
      const auto& jl = jlocals.at(nm);
      const auto& meta = bn.variables[static_cast<std::size_t>(v)];
      if (meta.kind == VarKind::discrete) {
        Cpt c;
        c.node = nm;
        c.parents = jl.at("parents").get<std::vector<std::string>>();
        for (const auto& pn : c.parents) {
          const int pv = bn.dag.index_of(pn);
          c.parent_cards.push_back(bn.variables[static_cast<std::size_t>(pv)].cardinality());
        }
        c.cardinality = meta.cardinality();
        for (const auto& row : jl.at("rows"))
          for (const auto& x : row) c.p.push_back(x.get<double>());
        if (static_cast<long long>(c.p.size()) != c.rows() * c.cardinality)
          throw IngestError("wrong table size for '" + nm + "'");
        bn.locals.emplace_back(std::move(c));
      } else {
        GaussianLocal gl;
        gl.node = nm;
        gl.parents = jl.at("parents").get<std::vector<std::string>>();
        gl.intercept = jl.at("intercept").get<double>();
        gl.coefficients = jl.at("coefficients").get<std::vector<double>>();
        gl.residual_variance = jl.at("residual_variance").get<double>();
        bn.locals.emplace_back(std::move(gl));
      }
    }
    bn.validate();
    return bn;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("malformed model file: ") + e.what());
  } catch (const ArgumentError& e) {
    throw IngestError(std::string("inconsistent model file: ") + e.what());
  } catch (const StructureError& e) {
    throw IngestError(std::string("inconsistent model file: ") + e.what());
  }
}

inline BayesianNetwork load_model(const std::string& text) {
  std::istringstream in(text);
  return load_model(in);
}

namespace detail {

inline std::string dot_id(const std::string& name) {
  bool plain = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
  for (char ch : name)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) plain = false;
  if (plain) return name;
  std::string quoted = "\"";
  for (char ch : name) {
    if (ch == '"' || ch == '\\') quoted += '\\';
    quoted += ch;
  }
  quoted += '"';
  return quoted;
}

}  // namespace detail

/// DOT rendering: nodes sorted by name, directed edges as "A -> B;",
/// undirected ones as "A -> B [dir=none];", deterministic byte output.
/// Extra per-edge attributes may be supplied keyed by (tail, head) as listed
/// in MixedGraph::edges().
inline std::string emit_dot(const MixedGraph& g,
                            const std::map<std::pair<std::string, std::string>, std::string>&
                                edge_attrs = {}) {
  std::string out = "digraph g {\n";
  for (const auto& nm : g.nodes()) out += "  " + detail::dot_id(nm) + ";\n";
  for (const auto& e : g.edges()) {
    out += "  " + detail::dot_id(e.tail) + " -> " + detail::dot_id(e.head);
    std::vector<std::string> attrs;
    if (e.kind == EdgeKind::undirected) attrs.push_back("dir=none");
    auto it = edge_attrs.find({e.tail, e.head});
    if (it != edge_attrs.end() && !it->second.empty()) attrs.push_back(it->second);
    if (!attrs.empty()) {
      out += " [";
      for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (i) out += ", ";
        out += attrs[i];
      }
      out += "]";
    }
    out += ";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace pgm
