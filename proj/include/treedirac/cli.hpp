#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "treedirac/decomposition.hpp"
#include "treedirac/discretize.hpp"
#include "treedirac/fw.hpp"
#include "treedirac/halfline.hpp"
#include "treedirac/numeric.hpp"
#include "treedirac/spectra.hpp"
#include "treedirac/tree.hpp"

namespace treedirac::cli {

using ordered_json = nlohmann::ordered_json;

// Exit codes shared by every command.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitResourceCap = 3;

struct ExperimentConfig {
  std::vector<std::int64_t> b;
  std::vector<double> t;
  std::optional<TailRule> tail;
  double c = 1.0;
  std::int64_t depth = 2;
  double h = 0.01;
  double window_lo = 1.0;
  double window_hi = 4.0;
  double scan_step = 0.0;   // 0 selects the default of (hi-lo)/2000
  double tol = 1e-9;
  int dim_cap = 6000;
  std::uint64_t seed = 0;
  double tol_match = 0.0;   // 0 selects the calibrated default
  std::map<std::string, std::string> command;

  GeneratingSequences tree() const { return GeneratingSequences(b, t, tail); }
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t idx = 0;
    out = std::stod(s, &idx);
    return idx == s.size();
  } catch (...) {
    return false;
  }
}

inline bool parse_int(const std::string& s, std::int64_t& out) {
  try {
    std::size_t idx = 0;
    out = std::stoll(s, &idx);
    return idx == s.size();
  } catch (...) {
    return false;
  }
}

inline bool parse_uint(const std::string& s, std::uint64_t& out) {
  try {
    std::size_t idx = 0;
    out = std::stoull(s, &idx);
    return idx == s.size() && s.find('-') == std::string::npos;
  } catch (...) {
    return false;
  }
}

template <typename T, typename Parse>
bool parse_list(const std::string& s, std::vector<T>& out, Parse&& one) {
  const std::string body = trim(s);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']') return false;
  out.clear();
  std::string inner = body.substr(1, body.size() - 2);
  if (trim(inner).empty()) return true;
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) {
    T v;
    if (!one(trim(item), v)) return false;
    out.push_back(v);
  }
  return true;
}

// Fixed 15-significant-digit float rendering used by every CSV emitter.
inline std::string fmt15(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

inline void write_text(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file " + path);
  os << content;
}

inline std::string error_json(const std::string& code, const std::string& message) {
  ordered_json j;
  j["error"]["code"] = code;
  j["error"]["message"] = message;
  return j.dump(2) + "\n";
}

}  // namespace detail

// Flat sectioned key-value format. Unknown sections and keys are errors, and
// every problem is reported, not just the first.
inline ParseResult parse_config(const std::string& text) {
  ParseResult res;
  ExperimentConfig cfg;
  std::vector<std::string>& errors = res.errors;

  bool saw_b = false, saw_t = false, saw_c = false;
  std::optional<std::int64_t> tail_b;
  std::optional<std::string> tail_rule;
  std::optional<double> tail_d, tail_q;
  int tail_line = 0;

  std::string section;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const std::string at = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back(at + "unterminated section header");
        continue;
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "tree" && section != "physics" && section != "numerics" &&
          section != "command")
        errors.push_back(at + "unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(at + "expected 'key = value'");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty()) {
      errors.push_back(at + "key '" + key + "' outside any section");
      continue;
    }
    auto bad = [&](const std::string& what) {
      errors.push_back(at + "invalid value for " + section + "." + key + " (" + what + ")");
    };
    if (section == "tree") {
      if (key == "b") {
        saw_b = detail::parse_list<std::int64_t>(value, cfg.b, detail::parse_int);
        if (!saw_b) bad("integer list like [1,2,2]");
      } else if (key == "t") {
        saw_t = detail::parse_list<double>(value, cfg.t, detail::parse_double);
        if (!saw_t) bad("number list like [0,1,2]");
      } else if (key == "tail_b") {
        std::int64_t v;
        if (detail::parse_int(value, v)) {
          tail_b = v;
          tail_line = lineno;
        } else {
          bad("integer");
        }
      } else if (key == "tail_rule") {
        if (value == "arithmetic" || value == "geometric") {
          tail_rule = value;
          tail_line = lineno;
        } else {
          bad("arithmetic or geometric");
        }
      } else if (key == "tail_d") {
        double v;
        if (detail::parse_double(value, v)) {
          tail_d = v;
          tail_line = lineno;
        } else {
          bad("number");
        }
      } else if (key == "tail_q") {
        double v;
        if (detail::parse_double(value, v)) {
          tail_q = v;
          tail_line = lineno;
        } else {
          bad("number");
        }
      } else {
        errors.push_back(at + "unknown key '" + key + "' in section [tree]");
      }
    } else if (section == "physics") {
      if (key == "c") {
        if (detail::parse_double(value, cfg.c))
          saw_c = true;
        else
          bad("number");
      } else {
        errors.push_back(at + "unknown key '" + key + "' in section [physics]");
      }
    } else if (section == "numerics") {
      double dv;
      std::int64_t iv;
      if (key == "depth") {
        if (detail::parse_int(value, iv))
          cfg.depth = iv;
        else
          bad("integer");
      } else if (key == "h") {
        if (detail::parse_double(value, dv))
          cfg.h = dv;
        else
          bad("number");
      } else if (key == "window") {
        std::vector<double> w;
        if (detail::parse_list<double>(value, w, detail::parse_double) && w.size() == 2) {
          cfg.window_lo = w[0];
          cfg.window_hi = w[1];
        } else {
          bad("pair like [1,4]");
        }
      } else if (key == "scan_step") {
        if (detail::parse_double(value, dv))
          cfg.scan_step = dv;
        else
          bad("number");
      } else if (key == "tol") {
        if (detail::parse_double(value, dv))
          cfg.tol = dv;
        else
          bad("number");
      } else if (key == "dim_cap") {
        if (detail::parse_int(value, iv))
          cfg.dim_cap = static_cast<int>(iv);
        else
          bad("integer");
      } else if (key == "seed") {
        std::uint64_t uv;
        if (detail::parse_uint(value, uv))
          cfg.seed = uv;
        else
          bad("unsigned integer");
      } else if (key == "tol_match") {
        if (detail::parse_double(value, dv))
          cfg.tol_match = dv;
        else
          bad("number");
      } else {
        errors.push_back(at + "unknown key '" + key + "' in section [numerics]");
      }
    } else if (section == "command") {
      cfg.command[key] = value;
    }
  }

  if (!saw_b) errors.push_back("tree.b required");
  if (!saw_t) errors.push_back("tree.t required");
  if (!saw_c) errors.push_back("physics.c required");

  if (tail_b || tail_rule || tail_d || tail_q) {
    const std::string at = "line " + std::to_string(tail_line) + ": ";
    if (!tail_b || !tail_rule || !tail_d) {
      errors.push_back(at + "tail needs tail_b, tail_rule and tail_d together");
    } else {
      TailRule tr;
      tr.branching = *tail_b;
      tr.kind = (*tail_rule == "arithmetic") ? TailRule::Kind::arithmetic
                                             : TailRule::Kind::geometric;
      tr.d = *tail_d;
      if (tr.kind == TailRule::Kind::geometric) {
        if (!tail_q) {
          errors.push_back(at + "geometric tail needs tail_q");
        } else {
          tr.q = *tail_q;
        }
      }
      cfg.tail = tr;
    }
  }

  if (saw_b && saw_t)
    for (const auto& e : GeneratingSequences::validate(cfg.b, cfg.t, cfg.tail))
      errors.push_back("tree: " + e);
  if (saw_c && !(cfg.c > 0.0)) errors.push_back("physics.c must be > 0");
  if (!(cfg.h > 0.0)) errors.push_back("numerics.h must be > 0");
  if (!(cfg.window_lo < cfg.window_hi))
    errors.push_back("numerics.window must satisfy lo < hi");
  if (cfg.depth < 1) errors.push_back("numerics.depth must be >= 1");
  if (cfg.dim_cap < 1) errors.push_back("numerics.dim_cap must be >= 1");
  if (!(cfg.tol > 0.0)) errors.push_back("numerics.tol must be > 0");

  if (errors.empty()) res.config = cfg;
  return res;
}

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> files;
  std::string message;  // error JSON on failure, human summary otherwise
};

namespace detail {

inline std::string spectrum_csv(const SpectralResult& r) {
  std::string out = "eigenvalue,multiplicity,source,residual\n";
  for (const auto& e : r.entries)
    out += fmt15(e.eigenvalue) + "," + std::to_string(e.multiplicity) + "," + e.source +
           "," + fmt15(e.residual) + "\n";
  return out;
}

inline RunResult run_describe(const ExperimentConfig& cfg, const std::string& out_dir) {
  const GeneratingSequences tree = cfg.tree();
  const HeightResult hr = height(tree);
  const ReducedHeightResult rr = reduced_height(tree);
  ordered_json j;
  j["tree"]["b"] = cfg.b;
  j["tree"]["t"] = cfg.t;
  if (cfg.tail) {
    j["tree"]["tail"]["branching"] = cfg.tail->branching;
    j["tree"]["tail"]["rule"] =
        cfg.tail->kind == TailRule::Kind::arithmetic ? "arithmetic" : "geometric";
    j["tree"]["tail"]["d"] = cfg.tail->d;
    if (cfg.tail->kind == TailRule::Kind::geometric) j["tree"]["tail"]["q"] = cfg.tail->q;
  } else {
    j["tree"]["tail"] = nullptr;
  }
  j["height"]["value"] = hr.finite ? ordered_json(hr.value) : ordered_json(nullptr);
  j["height"]["infinite"] = !hr.finite;
  j["height"]["prefix_only"] = hr.prefix_only;
  j["reduced_height"]["value"] =
      rr.divergent ? ordered_json(nullptr) : ordered_json(rr.value);
  j["reduced_height"]["divergent"] = rr.divergent;
  j["reduced_height"]["prefix_only"] = rr.prefix_only;
  j["total_length"]["depth"] = cfg.depth;
  j["total_length"]["value"] = total_length(tree, cfg.depth);
  const std::string path = out_dir + "/describe.json";
  write_text(path, j.dump(2) + "\n");
  return {kExitPass, {path}, "wrote " + path};
}

inline RunResult run_spectrum(const ExperimentConfig& cfg, const std::string& out_dir) {
  const GeneratingSequences tree = cfg.tree();
  std::string source = "predicted";
  if (auto it = cfg.command.find("source"); it != cfg.command.end()) source = it->second;
  SpectralResult result;
  if (source == "full") {
    result = full_tree_spectrum(tree, cfg.c, cfg.depth, cfg.h, cfg.window_lo,
                                cfg.window_hi, cfg.dim_cap);
  } else if (source == "predicted") {
    result = predicted_spectrum(tree, cfg.c, cfg.depth, cfg.window_lo, cfg.window_hi,
                                cfg.scan_step, std::min(cfg.tol, 1e-10));
  } else if ((source.front() == 'M' || source.front() == 'm') && source.size() > 1) {
    std::int64_t k = 0;
    if (!parse_int(source.substr(1), k) || k < 0 || k >= cfg.depth)
      throw std::invalid_argument("command.source must be full, predicted or M<k> with k < depth");
    const HalflineSpec spec = halfline_spec(tree, k, cfg.depth, cfg.c);
    const auto table = multiplicity_table(tree, cfg.depth);
    result.tree_description = tree.describe();
    result.c = cfg.c;
    result.depth = static_cast<int>(cfg.depth);
    for (double ev : eigenvalues(spec, cfg.window_lo, cfg.window_hi, cfg.scan_step,
                                 std::min(cfg.tol, 1e-10)))
      result.entries.push_back({ev, table[static_cast<std::size_t>(k)],
                                "M" + std::to_string(k), std::abs(secular(spec, ev))});
  } else {
    throw std::invalid_argument("command.source must be full, predicted or M<k>");
  }
  const std::string path = out_dir + "/spectrum.csv";
  write_text(path, spectrum_csv(result));
  return {kExitPass, {path}, "wrote " + path};
}

inline RunResult run_decompose_verify(const ExperimentConfig& cfg,
                                      const std::string& out_dir) {
  const GeneratingSequences tree = cfg.tree();
  const DecompositionReport rep =
      verify_decomposition(tree, cfg.c, cfg.depth, cfg.h, cfg.window_lo, cfg.window_hi,
                           cfg.tol_match, cfg.dim_cap);
  ordered_json j;
  j["pass"] = rep.pass;
  j["tol_match"] = rep.tol_match;
  j["calibration_error"] = rep.calibration_error;
  j["max_distance"] = rep.max_distance;
  j["pairs"] = ordered_json::array();
  for (const auto& p : rep.pairs) {
    ordered_json pj;
    pj["full"] = p.full;
    pj["predicted"] = p.predicted;
    pj["source"] = p.source;
    pj["distance"] = p.distance;
    j["pairs"].push_back(pj);
  }
  j["unmatched_full"] = rep.unmatched_full;
  j["unmatched_predicted"] = ordered_json::array();
  for (const auto& e : rep.unmatched_predicted)
    j["unmatched_predicted"].push_back(e.eigenvalue);
  const std::string path = out_dir + "/decompose_verify.json";
  write_text(path, j.dump(2) + "\n");
  return {rep.pass ? kExitPass : kExitCheckFailed, {path},
          rep.pass ? "decomposition verified" : "decomposition mismatch"};
}

inline RunResult run_weyl(const ExperimentConfig& cfg, const std::string& out_dir) {
  const GeneratingSequences tree = cfg.tree();
  if (!has_unbounded_edges(tree))
    return {kExitConfigError, {},
            error_json("precondition",
                       "weyl requires unbounded edge lengths (geometric tail with q > 1)")};
  std::string op = "dirac";
  std::int64_t m_min = 4, m_max = 8, n = 4096;
  double r = 1.0;
  if (auto it = cfg.command.find("operator"); it != cfg.command.end()) op = it->second;
  if (auto it = cfg.command.find("m_min"); it != cfg.command.end())
    if (!parse_int(it->second, m_min)) throw std::invalid_argument("command.m_min must be an integer");
  if (auto it = cfg.command.find("m_max"); it != cfg.command.end())
    if (!parse_int(it->second, m_max)) throw std::invalid_argument("command.m_max must be an integer");
  if (auto it = cfg.command.find("n"); it != cfg.command.end())
    if (!parse_int(it->second, n)) throw std::invalid_argument("command.n must be an integer");
  if (auto it = cfg.command.find("r"); it != cfg.command.end())
    if (!parse_double(it->second, r)) throw std::invalid_argument("command.r must be a number");
  if (op != "dirac" && op != "laplacian")
    throw std::invalid_argument("command.operator must be dirac or laplacian");
  if (m_min < 0 || m_max < m_min)
    throw std::invalid_argument("command range must satisfy 0 <= m_min <= m_max");
  std::string csv = "m,edge_length,residual,target_energy\n";
  bool decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (std::int64_t m = m_min; m <= m_max; ++m) {
    const double l = std::pow(2.0, double(m));
    double residual, target;
    if (op == "dirac") {
      residual = weyl_residual_dirac(static_cast<int>(m), r, cfg.c, static_cast<int>(n));
      target = dispersion(r, cfg.c);
    } else {
      residual = weyl_residual_laplacian(static_cast<int>(m), r, static_cast<int>(n));
      target = r * r;
    }
    if (residual >= prev) decreasing = false;
    prev = residual;
    csv += std::to_string(m) + "," + fmt15(l) + "," + fmt15(residual) + "," +
           fmt15(target) + "\n";
  }
  const std::string path = out_dir + "/weyl.csv";
  write_text(path, csv);
  return {decreasing ? kExitPass : kExitCheckFailed, {path},
          decreasing ? "residuals decay" : "residuals fail to decay"};
}

inline RunResult run_fw_check(const ExperimentConfig& cfg, const std::string& out_dir) {
  std::int64_t n = 256, trials = 20;
  if (auto it = cfg.command.find("grid_n"); it != cfg.command.end())
    if (!parse_int(it->second, n)) throw std::invalid_argument("command.grid_n must be an integer");
  if (auto it = cfg.command.find("trials"); it != cfg.command.end())
    if (!parse_int(it->second, trials)) throw std::invalid_argument("command.trials must be an integer");
  const FourierGrid grid(static_cast<int>(n), 2.0 * std::numbers::pi);
  std::mt19937_64 gen(cfg.seed);
  double max_norm = 0.0, max_form = 0.0;
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    std::vector<cdouble> u(static_cast<std::size_t>(n));
    for (auto& v : u)
      v = cdouble(uniform_in(gen, -1.0, 1.0), uniform_in(gen, -1.0, 1.0));
    const GridSpinor psi = phi_map(u, cfg.c, grid);
    double nu = 0.0, np = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      nu += std::norm(u[k]);
      np += std::norm(psi.comp1[k]) + std::norm(psi.comp2[k]);
    }
    max_norm = std::max(max_norm, std::abs(std::sqrt(np / nu) - 1.0));
    max_form = std::max(max_form,
                        verify_form_identity(u, cfg.c, grid).relative_discrepancy);
  }
  const double mode_defect = mode_eigenvector_defect(cfg.c, grid);
  const double tolerance = 1e-12;
  const bool pass = max_norm <= tolerance && max_form <= tolerance &&
                    mode_defect <= tolerance;
  ordered_json j;
  j["grid_n"] = n;
  j["circumference"] = 2.0 * std::numbers::pi;
  j["c"] = cfg.c;
  j["trials"] = trials;
  j["max_norm_defect"] = max_norm;
  j["max_form_discrepancy"] = max_form;
  j["mode_eigenvector_defect"] = mode_defect;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  const std::string path = out_dir + "/fw_check.json";
  write_text(path, j.dump(2) + "\n");
  return {pass ? kExitPass : kExitCheckFailed, {path},
          pass ? "identity verified" : "identity check failed"};
}

}  // namespace detail

inline RunResult run(const std::string& command, const ExperimentConfig& cfg,
                     const std::string& out_dir) {
  try {
    if (command == "describe") return detail::run_describe(cfg, out_dir);
    if (command == "spectrum") return detail::run_spectrum(cfg, out_dir);
    if (command == "decompose-verify") return detail::run_decompose_verify(cfg, out_dir);
    if (command == "weyl") return detail::run_weyl(cfg, out_dir);
    if (command == "fw-check") return detail::run_fw_check(cfg, out_dir);
    return {kExitConfigError, {},
            detail::error_json("config", "unknown command '" + command + "'")};
  } catch (const dimension_cap_error& e) {
    return {kExitResourceCap, {}, detail::error_json("resource-cap", e.what())};
  } catch (const std::exception& e) {
    return {kExitConfigError, {}, detail::error_json("invalid-input", e.what())};
  }
}

}  // namespace treedirac::cli
