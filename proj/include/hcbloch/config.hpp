#pragma once

// Run configuration: a YAML document with a strict schema. Parsing fills every
// default, so serialize(parse(x)) is the normalized form of x and parsing it
// again gives the same RunConfig.
//
//   command: bloch            # homogenize | bloch | dispersion | pw | capacity
//                             # | experiment:thm22 | experiment:thm31 | experiment:gap_map
//                             # | experiment:pw_thm22 | experiment:pw_fiber
//   dim: 2
//   n: 64                     # cells per axis, or a list [nx, ny(, nz)]
//   microstructure:
//     kind: constant          # constant | inclusion | fiber | file
//     a0: 1                   # constant
//     eps: 0.5                # inclusion, fiber
//     beta: 4                 # inclusion, fiber (fiber: default r^-2 eps^-beta_exponent)
//     rho: 0.5                # inclusion
//     shape: square           # inclusion: square | disc
//     r_eps: 0.3              # fiber (default radius_for_gamma(eps, gamma))
//     R: 1.2                  # fiber capacity radius
//     path: field.bin         # file
//   eta: [0.3, 0.2]           # or eta_list: [[...], [...]]
//   eps_list: [0.5, 0.25]
//   gamma: 2
//   beta_exponent: 5
//   t_list: [1, 0.25, 0.0625, 0.015625]
//   k: 1
//   capacity_R: 1.2
//   resolution: {cells_across: 8, multiple: 8, cap: 2048, n: 0}
//   mesh_check: true
//   seed: 24389
//   output: out
//   conventions: {q_normalization: cell-average}

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hcbloch/error.hpp"
#include "hcbloch/microstructure.hpp"

namespace hcbloch {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, int line, const std::string& what)
      : Error("config: " + path + (line >= 0 ? " (line " + std::to_string(line + 1) + ")" : "") + ": " + what),
        path_(path),
        line_(line) {}
  const std::string& key_path() const noexcept { return path_; }
  /// zero-based line, -1 when unknown
  int line() const noexcept { return line_; }

 private:
  std::string path_;
  int line_;
};

enum class Command { homogenize, bloch, dispersion, pw, capacity, experiment };

struct MicrostructureConfig {
  std::string kind = "constant";
  double a0 = 1.0;
  double eps = 1.0;
  double beta = 1.0;
  double rho = 0.5;
  std::string shape = "square";
  double r_eps = 0.0;
  double R = 1.2;
  std::string path;

  bool operator==(const MicrostructureConfig&) const = default;

  MicrostructureSpec spec() const {
    if (kind == "constant") return ConstantMedium{a0};
    if (kind == "inclusion")
      return TwoPhaseInclusion{eps, beta, rho, shape == "disc" ? InclusionShape::disc : InclusionShape::square};
    if (kind == "fiber") return FiberLattice{eps, r_eps, beta, R};
    return FromFile{path};
  }
};

struct ResolutionConfig {
  int cells_across = 8;
  int multiple = 8;
  int cap = 2048;
  int n = 0;
  bool operator==(const ResolutionConfig&) const = default;
};

struct RunConfig {
  std::string command = "bloch";  ///< as written, e.g. "experiment:thm31"
  int dim = 2;
  std::vector<int> n{64, 64};
  MicrostructureConfig microstructure;
  std::vector<std::vector<double>> eta_list;  ///< one entry per requested momentum (eta is the single-entry case)
  std::vector<double> eps_list;
  double gamma = 2.0;
  double beta_exponent = 5.0;
  std::vector<double> t_list{1.0, 0.25, 0.0625, 0.015625};
  int k = 1;
  double capacity_R = 1.2;
  ResolutionConfig resolution;
  bool mesh_check = true;
  std::uint64_t seed = 24389;
  std::string output = "out";
  std::string q_normalization = "cell-average";

  bool operator==(const RunConfig&) const = default;

  Command kind() const {
    if (command == "homogenize") return Command::homogenize;
    if (command == "bloch") return Command::bloch;
    if (command == "dispersion") return Command::dispersion;
    if (command == "pw") return Command::pw;
    if (command == "capacity") return Command::capacity;
    return Command::experiment;
  }

  /// "thm31" for "experiment:thm31", empty otherwise.
  std::string experiment() const { return kind() == Command::experiment ? command.substr(command.find(':') + 1) : std::string(); }

  /// File stem for the emitted table.
  std::string stem() const {
    std::string s = command;
    for (auto& c : s)
      if (c == ':') c = '_';
    return s;
  }
};

namespace detail {

inline const std::set<std::string> kExperiments{"thm22", "thm31", "gap_map", "pw_thm22", "pw_fiber"};

class ConfigReader {
 public:
  int line(const YAML::Node& n) const { return n.IsDefined() ? n.Mark().line : -1; }

  void strict(const YAML::Node& map, const std::string& prefix, const std::set<std::string>& allowed) const {
    if (!map.IsMap()) throw ConfigError(prefix.empty() ? "<root>" : prefix, line(map), "expected a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) throw ConfigError(join(prefix, key), line(kv.first), "unknown key");
    }
  }

  static std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

  template <typename T>
  T scalar(const YAML::Node& n, const std::string& path, const char* type) const {
    if (!n.IsScalar()) throw ConfigError(path, line(n), std::string("type mismatch, expected ") + type);
    try {
      return n.as<T>();
    } catch (const YAML::BadConversion&) {
      throw ConfigError(path, line(n), std::string("type mismatch, expected ") + type + ", got '" + n.Scalar() + "'");
    }
  }

  double number(const YAML::Node& n, const std::string& path) const { return scalar<double>(n, path, "a number"); }
  int integer(const YAML::Node& n, const std::string& path) const {
    const auto s = n.IsScalar() ? n.Scalar() : std::string();
    if (s.find_first_of(".eE") != std::string::npos) throw ConfigError(path, line(n), "type mismatch, expected an integer, got '" + s + "'");
    return scalar<int>(n, path, "an integer");
  }
  bool boolean(const YAML::Node& n, const std::string& path) const { return scalar<bool>(n, path, "a boolean"); }
  std::string text(const YAML::Node& n, const std::string& path) const { return scalar<std::string>(n, path, "a string"); }

  std::vector<double> numbers(const YAML::Node& n, const std::string& path) const {
    if (!n.IsSequence()) throw ConfigError(path, line(n), "type mismatch, expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
};

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // keep numbers visibly floating point so they re-read as doubles
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + "]";
}

inline std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Parse and validate a configuration document.
inline RunConfig parse_config(const std::string& text) {
  YAML::Node loaded;
  try {
    loaded = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("<document>", e.mark.line, e.msg);
  }
  const YAML::Node& root = loaded;
  const detail::ConfigReader rd;
  if (!root.IsDefined() || root.IsNull()) throw ConfigError("<root>", -1, "empty document");
  rd.strict(root, "", {"command", "dim", "n", "microstructure", "eta", "eta_list", "eps_list", "gamma", "beta_exponent", "t_list", "k",
                       "capacity_R", "resolution", "mesh_check", "seed", "output", "conventions"});
  RunConfig c;
  if (!root["command"]) throw ConfigError("command", -1, "missing required key");
  c.command = rd.text(root["command"], "command");
  {
    static const std::set<std::string> plain{"homogenize", "bloch", "dispersion", "pw", "capacity"};
    const bool is_exp = c.command.rfind("experiment:", 0) == 0 && detail::kExperiments.count(c.command.substr(11));
    if (!plain.count(c.command) && !is_exp)
      throw ConfigError("command", rd.line(root["command"]),
                        "unknown command '" + c.command + "' (homogenize, bloch, dispersion, pw, capacity, experiment:<thm22|thm31|gap_map|pw_thm22|pw_fiber>)");
  }
  const auto kind = c.kind();
  const auto exp = c.experiment();

  if (root["dim"]) c.dim = rd.integer(root["dim"], "dim");
  else if (exp == "thm31" || exp == "gap_map" || exp == "pw_fiber") c.dim = 3;
  if (c.dim < 1 || c.dim > 3) throw ConfigError("dim", rd.line(root["dim"]), "dimension must be 1, 2 or 3");

  if (root["n"]) {
    const auto& nn = root["n"];
    if (nn.IsSequence()) {
      c.n.clear();
      for (std::size_t i = 0; i < nn.size(); ++i) c.n.push_back(rd.integer(nn[i], "n[" + std::to_string(i) + "]"));
      if (static_cast<int>(c.n.size()) != c.dim)
        throw ConfigError("n", rd.line(nn), "has " + std::to_string(c.n.size()) + " entries for dim " + std::to_string(c.dim));
    } else {
      c.n.assign(static_cast<std::size_t>(c.dim), rd.integer(nn, "n"));
    }
  } else {
    c.n.assign(static_cast<std::size_t>(c.dim), kind == Command::capacity ? 512 : 64);
  }
  for (int v : c.n)
    if (v < 2) throw ConfigError("n", rd.line(root["n"]), "every axis needs at least 2 cells");

  if (root["gamma"]) {
    c.gamma = rd.number(root["gamma"], "gamma");
    if (!(c.gamma > 0.0))
      throw ConfigError("gamma", rd.line(root["gamma"]), "must be positive: the capacity density gamma of the critical fiber lattice lies in (0, inf)");
  }
  if (root["beta_exponent"]) c.beta_exponent = rd.number(root["beta_exponent"], "beta_exponent");
  if (root["capacity_R"]) {
    c.capacity_R = rd.number(root["capacity_R"], "capacity_R");
    if (!(c.capacity_R > 0.0 && c.capacity_R < std::numbers::pi)) throw ConfigError("capacity_R", rd.line(root["capacity_R"]), "must lie in (0, pi)");
  }

  if (root["eps_list"]) {
    c.eps_list = rd.numbers(root["eps_list"], "eps_list");
    for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
      try {
        reciprocal_integer(c.eps_list[i]);
      } catch (const Error& e) {
        throw ConfigError("eps_list[" + std::to_string(i) + "]", rd.line(root["eps_list"]), e.what());
      }
    }
  } else if (exp == "thm22" || exp == "pw_thm22") {
    c.eps_list = {0.5, 0.25, 0.125};
  } else if (exp == "thm31" || exp == "gap_map" || exp == "pw_fiber" || kind == Command::capacity) {
    c.eps_list = {1.0 / 3, 0.25, 0.2, 1.0 / 6};
  }

  if (root["t_list"]) {
    c.t_list = rd.numbers(root["t_list"], "t_list");
    for (std::size_t i = 0; i < c.t_list.size(); ++i)
      if (!(c.t_list[i] > 0.0) || (i > 0 && !(c.t_list[i] < c.t_list[i - 1])))
        throw ConfigError("t_list", rd.line(root["t_list"]), "must be positive and strictly decreasing");
  }
  if (root["k"]) {
    c.k = rd.integer(root["k"], "k");
    if (c.k < 1) throw ConfigError("k", rd.line(root["k"]), "must be at least 1");
  }

  const int eta_dim = (exp == "thm31" || exp == "gap_map" || exp == "pw_fiber") ? 3 : (exp == "thm22" || exp == "pw_thm22") ? 2 : c.dim;
  if (root["eta"] && root["eta_list"]) throw ConfigError("eta_list", rd.line(root["eta_list"]), "give either eta or eta_list, not both");
  if (root["eta"]) {
    c.eta_list = {rd.numbers(root["eta"], "eta")};
  } else if (root["eta_list"]) {
    const auto& el = root["eta_list"];
    if (!el.IsSequence()) throw ConfigError("eta_list", rd.line(el), "type mismatch, expected a list of lists");
    for (std::size_t i = 0; i < el.size(); ++i) c.eta_list.push_back(rd.numbers(el[i], "eta_list[" + std::to_string(i) + "]"));
  } else if (exp == "thm22" || exp == "pw_thm22") {
    c.eta_list = {{0.25, 0.0}};
  } else if (exp == "thm31" || exp == "gap_map" || exp == "pw_fiber") {
    c.eta_list = {{0.2, 0.2, 0.3}};
  } else if (kind == Command::bloch || kind == Command::dispersion || kind == Command::pw) {
    throw ConfigError("eta", -1, "missing required key for command " + c.command);
  }
  for (std::size_t i = 0; i < c.eta_list.size(); ++i)
    if (static_cast<int>(c.eta_list[i].size()) != eta_dim)
      throw ConfigError(root["eta"] ? "eta" : "eta_list[" + std::to_string(i) + "]", rd.line(root["eta"] ? root["eta"] : root["eta_list"]),
                        "has " + std::to_string(c.eta_list[i].size()) + " components, expected " + std::to_string(eta_dim));
  if ((exp == "thm31" || exp == "gap_map") && c.eta_list.front()[2] == 0.0)
    throw ConfigError("eta", rd.line(root["eta"]), "eta3 must be nonzero for " + c.command);
  if (kind == Command::experiment && c.eta_list.size() != 1) throw ConfigError("eta_list", rd.line(root["eta_list"]), "experiments take a single eta");

  if (root["microstructure"]) {
    const auto& m = root["microstructure"];
    rd.strict(m, "microstructure", {"kind", "a0", "eps", "beta", "rho", "shape", "r_eps", "R", "path"});
    auto& ms = c.microstructure;
    ms.kind = m["kind"] ? rd.text(m["kind"], "microstructure.kind") : "constant";
    auto need = [&](const char* key) {
      if (!m[key]) throw ConfigError(std::string("microstructure.") + key, rd.line(m), "missing required key for kind " + ms.kind);
    };
    auto only = [&](const std::set<std::string>& ok) {
      for (const auto& kv : m) {
        const auto key = kv.first.as<std::string>();
        if (key != "kind" && !ok.count(key))
          throw ConfigError("microstructure." + key, rd.line(kv.first), "not a parameter of kind " + ms.kind);
      }
    };
    if (ms.kind == "constant") {
      only({"a0"});
      if (m["a0"]) ms.a0 = rd.number(m["a0"], "microstructure.a0");
      if (!(ms.a0 > 0.0)) throw ConfigError("microstructure.a0", rd.line(m), "must be positive");
    } else if (ms.kind == "inclusion") {
      only({"eps", "beta", "rho", "shape"});
      if (m["eps"]) ms.eps = rd.number(m["eps"], "microstructure.eps");
      need("beta");
      ms.beta = rd.number(m["beta"], "microstructure.beta");
      if (m["rho"]) ms.rho = rd.number(m["rho"], "microstructure.rho");
      if (m["shape"]) ms.shape = rd.text(m["shape"], "microstructure.shape");
      if (ms.shape != "square" && ms.shape != "disc") throw ConfigError("microstructure.shape", rd.line(m["shape"]), "must be square or disc");
      if (!(ms.beta >= 1.0)) throw ConfigError("microstructure.beta", rd.line(m["beta"]), "must be >= 1");
      if (!(ms.rho > 0.0 && ms.rho < 1.0)) throw ConfigError("microstructure.rho", rd.line(m["rho"]), "must lie in (0, 1)");
    } else if (ms.kind == "fiber") {
      only({"eps", "beta", "r_eps", "R"});
      need("eps");
      ms.eps = rd.number(m["eps"], "microstructure.eps");
      try {
        ms.r_eps = m["r_eps"] ? rd.number(m["r_eps"], "microstructure.r_eps") : radius_for_gamma(ms.eps, c.gamma);
        ms.beta = m["beta"] ? rd.number(m["beta"], "microstructure.beta") : BetaRule{c.beta_exponent}(ms.eps, ms.r_eps);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError("microstructure", rd.line(m), e.what());
      }
      ms.R = m["R"] ? rd.number(m["R"], "microstructure.R") : c.capacity_R;
      if (!(ms.r_eps > 0.0 && ms.r_eps < ms.R && ms.R < std::numbers::pi))
        throw ConfigError("microstructure", rd.line(m), "fiber geometry needs 0 < r_eps < R < pi");
      if (!(ms.beta >= 1.0)) throw ConfigError("microstructure.beta", rd.line(m), "must be >= 1");
    } else if (ms.kind == "file") {
      only({"path"});
      need("path");
      ms.path = rd.text(m["path"], "microstructure.path");
    } else {
      throw ConfigError("microstructure.kind", rd.line(m["kind"]), "unknown kind '" + ms.kind + "' (constant, inclusion, fiber, file)");
    }
    if (ms.kind == "inclusion" || ms.kind == "fiber") {
      try {
        reciprocal_integer(ms.eps);
      } catch (const Error& e) {
        throw ConfigError("microstructure.eps", rd.line(m), e.what());
      }
    }
  }

  if (root["resolution"]) {
    const auto& r = root["resolution"];
    rd.strict(r, "resolution", {"cells_across", "multiple", "cap", "n"});
    if (r["cells_across"]) c.resolution.cells_across = rd.integer(r["cells_across"], "resolution.cells_across");
    if (r["multiple"]) c.resolution.multiple = rd.integer(r["multiple"], "resolution.multiple");
    if (r["cap"]) c.resolution.cap = rd.integer(r["cap"], "resolution.cap");
    if (r["n"]) c.resolution.n = rd.integer(r["n"], "resolution.n");
    if (c.resolution.cells_across < 4) throw ConfigError("resolution.cells_across", rd.line(r), "must be at least 4");
    if (c.resolution.multiple < 1) throw ConfigError("resolution.multiple", rd.line(r), "must be at least 1");
    if (c.resolution.cap < 8) throw ConfigError("resolution.cap", rd.line(r), "must be at least 8");
    if (c.resolution.n < 0) throw ConfigError("resolution.n", rd.line(r), "must be nonnegative");
  }
  if (root["mesh_check"]) c.mesh_check = rd.boolean(root["mesh_check"], "mesh_check");
  if (root["seed"]) c.seed = rd.scalar<std::uint64_t>(root["seed"], "seed", "an unsigned integer");
  if (root["output"]) c.output = rd.text(root["output"], "output");
  if (root["conventions"]) {
    const auto& cv = root["conventions"];
    rd.strict(cv, "conventions", {"q_normalization"});
    if (cv["q_normalization"]) c.q_normalization = rd.text(cv["q_normalization"], "conventions.q_normalization");
    if (c.q_normalization != "cell-average")
      throw ConfigError("conventions.q_normalization", rd.line(cv), "only cell-average (q averaged over |Y|) is implemented");
  }
  if ((kind == Command::experiment || kind == Command::capacity) && c.eps_list.empty())
    throw ConfigError("eps_list", -1, "missing required key for command " + c.command);
  return c;
}

/// Normalized YAML text: every field, fixed order, 17 significant digits.
inline std::string serialize_config(const RunConfig& c) {
  using detail::list;
  using detail::num;
  std::ostringstream o;
  o << "command: " << detail::quoted(c.command) << "\n";
  o << "dim: " << c.dim << "\n";
  o << "n: [";
  for (std::size_t i = 0; i < c.n.size(); ++i) o << (i ? ", " : "") << c.n[i];
  o << "]\n";
  const auto& m = c.microstructure;
  o << "microstructure:\n  kind: " << m.kind << "\n";
  if (m.kind == "constant") o << "  a0: " << num(m.a0) << "\n";
  if (m.kind == "inclusion")
    o << "  eps: " << num(m.eps) << "\n  beta: " << num(m.beta) << "\n  rho: " << num(m.rho) << "\n  shape: " << m.shape << "\n";
  if (m.kind == "fiber")
    o << "  eps: " << num(m.eps) << "\n  beta: " << num(m.beta) << "\n  r_eps: " << num(m.r_eps) << "\n  R: " << num(m.R) << "\n";
  if (m.kind == "file") o << "  path: " << detail::quoted(m.path) << "\n";
  o << "eta_list: [";
  for (std::size_t i = 0; i < c.eta_list.size(); ++i) o << (i ? ", " : "") << list(c.eta_list[i]);
  o << "]\n";
  o << "eps_list: " << list(c.eps_list) << "\n";
  o << "gamma: " << num(c.gamma) << "\n";
  o << "beta_exponent: " << num(c.beta_exponent) << "\n";
  o << "t_list: " << list(c.t_list) << "\n";
  o << "k: " << c.k << "\n";
  o << "capacity_R: " << num(c.capacity_R) << "\n";
  o << "resolution:\n  cells_across: " << c.resolution.cells_across << "\n  multiple: " << c.resolution.multiple << "\n  cap: " << c.resolution.cap
    << "\n  n: " << c.resolution.n << "\n";
  o << "mesh_check: " << (c.mesh_check ? "true" : "false") << "\n";
  o << "seed: " << c.seed << "\n";
  o << "output: " << detail::quoted(c.output) << "\n";
  o << "conventions:\n  q_normalization: " << c.q_normalization << "\n";
  return o.str();
}

}  // namespace hcbloch
