#pragma once

// JSON model / function / family files and CSV field output.
//
// Model files:
//   {"kind":"graph", "atoms":[{"id":"v0","m":1}, ...], "conductances":[["v0","v1",1.0], ...]}
//   {"kind":"sg", "level":4}
//   {"kind":"superposition", "n":2, "grid":32}
// Function payloads:
//   graph          [values...] or {"<id>": value, ...} (missing ids are 0)
//   sg             {"level":l, "values":[...]} or {"harmonic":[a0,a1,a2]}
//   superposition  "x1*y" or {"constant":c, "terms":{"x1":1.0, ...}}
// Family files: {"backend":"graph", "functions":[payload, ...]}

#include "dirform/forms.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <variant>

namespace dirform {

using json = nlohmann::json;
using AnyModel = std::variant<GraphForm, SGForm, SuperpositionForm>;

class IoError : public Error {
 public:
  using Error::Error;
};

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Shortest round-trip-safe decimal (%.17g).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json graph_to_json(const GraphForm& g) {
  json atoms = json::array();
  for (std::size_t x = 0; x < g.size(); ++x) atoms.push_back({{"id", g.atoms().id(x)}, {"m", g.atoms().m(x)}});
  json cond = json::array();
  for (const auto& e : g.edges()) cond.push_back({g.atoms().id(e.a), g.atoms().id(e.b), e.c});
  return {{"kind", "graph"}, {"atoms", atoms}, {"conductances", cond}};
}

inline json model_to_json(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GraphForm>) {
          return graph_to_json(m);
        } else if constexpr (std::is_same_v<T, SGForm>) {
          return {{"kind", "sg"}, {"level", m.level()}};
        } else {
          return {{"kind", "superposition"}, {"n", m.dim()}, {"grid", m.grid()}};
        }
      },
      model);
}

inline AnyModel model_from_json(const json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "graph") {
      std::vector<std::string> ids;
      std::vector<double> m;
      for (const auto& a : j.at("atoms")) {
        ids.push_back(a.at("id").get<std::string>());
        m.push_back(a.value("m", 1.0));
      }
      AtomSpace space(Backend::graph, ids, m);
      std::vector<GraphForm::Edge> edges;
      for (const auto& c : j.value("conductances", json::array())) {
        auto endpoint = [&](const json& v) {
          return v.is_string() ? space.index_of(v.get<std::string>()) : v.get<std::size_t>();
        };
        edges.push_back({endpoint(c.at(0)), endpoint(c.at(1)), c.at(2).get<double>()});
      }
      return GraphForm(std::move(space), std::move(edges));
    }
    if (kind == "sg" || kind == "sg-cells") return SGForm(j.at("level").get<int>());
    if (kind == "superposition") return SuperpositionForm(j.at("n").get<int>(), j.at("grid").get<int>());
    throw IoError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  }
}

inline AnyModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

inline Backend backend_of(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.atoms().kind(); }, model);
}

inline Vector function_from_json(const GraphForm& g, const json& j) {
  Vector f = Vector::Zero(static_cast<Eigen::Index>(g.size()));
  if (j.is_array()) {
    if (j.size() != g.size()) throw BackendMismatch("graph function has " + std::to_string(j.size()) + " values, model has " + std::to_string(g.size()) + " atoms");
    for (std::size_t i = 0; i < j.size(); ++i) f[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  } else if (j.is_object()) {
    for (const auto& [id, v] : j.items()) f[static_cast<Eigen::Index>(g.atoms().index_of(id))] = v.get<double>();
  } else {
    throw BackendMismatch("graph function must be an array or an id map");
  }
  return f;
}

inline SGFunction function_from_json(const SGForm& form, const json& j) {
  if (!j.is_object()) throw BackendMismatch("SG function must be an object");
  if (j.contains("harmonic")) {
    const auto a = j.at("harmonic").get<std::vector<double>>();
    if (a.size() != 3) throw BackendMismatch("harmonic SG function needs 3 boundary values");
    return SGFunction::harmonic(Vector3(a[0], a[1], a[2]));
  }
  const auto values = j.at("values").get<std::vector<double>>();
  SGFunction f{j.at("level").get<int>(), Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()))};
  form.validate(f);
  return f;
}

inline Polynomial2 function_from_json(const SuperpositionForm& form, const json& j) {
  if (j.is_string()) return form.catalogue(j.get<std::string>());
  if (!j.is_object()) throw BackendMismatch("superposition function must be a catalogue id or an object");
  std::map<std::string, double> terms;
  const json listed = j.value("terms", json::object());
  for (const auto& [id, c] : listed.items()) terms[id] = c.get<double>();
  return form.from_terms(terms, j.value("constant", 0.0));
}

inline json function_to_json(const GraphForm&, const Vector& f) { return std::vector<double>(f.data(), f.data() + f.size()); }

inline json function_to_json(const SGForm&, const SGFunction& f) {
  return {{"level", f.level}, {"values", std::vector<double>(f.values.data(), f.values.data() + f.values.size())}};
}

inline json function_to_json(const SuperpositionForm& form, const Polynomial2& f) {
  json terms = json::object();
  const auto names = form.catalogue_names();
  // Linear part, then the upper triangle of the quadratic part.
  for (int k = 0; k < f.dim(); ++k) {
    if (f.linear[k] != 0.0) terms[names[static_cast<std::size_t>(k)]] = f.linear[k];
  }
  std::size_t idx = static_cast<std::size_t>(f.dim());
  for (int a = 0; a < f.dim(); ++a) {
    for (int b = a; b < f.dim(); ++b, ++idx) {
      const double c = a == b ? f.quadratic(a, a) : 2.0 * f.quadratic(a, b);
      if (c != 0.0) terms[names[idx]] = c;
    }
  }
  return {{"constant", f.constant}, {"terms", terms}};
}

/// Family files carry a backend tag; a mismatch with the model is an error.
template <DirichletModel M>
std::vector<FunctionOf<M>> family_from_json(const M& model, const json& j) {
  const auto tag = backend_from_string(j.at("backend").get<std::string>());
  if (tag != model.atoms().kind()) {
    throw BackendMismatch("family is for backend '" + std::string(to_string(tag)) + "', model is '" +
                          std::string(to_string(model.atoms().kind())) + "'");
  }
  std::vector<FunctionOf<M>> out;
  for (const auto& f : j.at("functions")) out.push_back(function_from_json(model, f));
  if (out.empty()) throw Error("family file has no functions");
  return out;
}

template <DirichletModel M>
json family_to_json(const M& model, std::span<const FunctionOf<M>> fs) {
  json arr = json::array();
  for (const auto& f : fs) arr.push_back(function_to_json(model, f));
  return {{"backend", std::string(to_string(model.atoms().kind()))}, {"functions", arr}};
}

/// "default", "indicators" (graph only), or a path to a family file.
template <DirichletModel M>
std::vector<FunctionOf<M>> resolve_family(const M& model, const std::string& spec) {
  if (spec.empty() || spec == "default") return default_family(model);
  if (spec == "indicators") {
    if constexpr (std::is_same_v<M, GraphForm>) {
      return indicator_family(model);
    } else {
      throw BackendMismatch("indicator family is only defined for graphs");
    }
  }
  return family_from_json(model, read_json(spec));
}

/// CSV with an "atom_id" first column; numbers at full precision.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(const std::string& id, std::span<const double> values) {
    std::string line = id;
    for (double v : values) line += "," + format_double(v);
    rows_.push_back(std::move(line));
  }
  void add(const std::string& id, std::initializer_list<double> values) { add(id, std::span<const double>(values.begin(), values.size())); }
  void add_raw(std::string line) { rows_.push_back(std::move(line)); }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += "\n";
    for (const auto& r : rows_) out += r + "\n";
    return out;
  }

  void save(const std::filesystem::path& path) const { write_text(path, str()); }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

}  // namespace dirform
