#pragma once

// Run configuration: one JSON document with sections patches, learn, tomo,
// recon and paths. Every key has a default; keys that are not part of the
// schema are rejected, as are values of the wrong type.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpc/dict_learn.hpp"
#include "tpc/errors.hpp"
#include "tpc/recon.hpp"
#include "tpc/tomo.hpp"

namespace tpc {

using Json = nlohmann::json;

struct PatchSection {
  Index p = 8;
  Index r = 8;
  Index stride = 4;
  Index max_patches = 0;  // 0: keep every window
  std::uint64_t seed = 0;
};

struct LearnSection {
  Index s = 32;
  double lambda = 0.1;
  double rho = 1.0;
  double eps = 1e-4;
  int max_iter = 1000;
  int dykstra_max_iter = 100;
  double dykstra_tol = 1e-10;
  std::uint64_t seed = 0;
  std::vector<double> lambdas;  // sweep grid
};

struct TomoSection {
  Index num_angles = 20;
  Index rays_per_angle = 95;
  double angle_start = 0.0;
  double angle_end = 180.0;
  double noise_level = 0.01;
  std::uint64_t seed = 0;
  bool write_matrix = false;
};

struct ReconSection {
  double mu = 1.0;
  double delta = 0.1;
  int nu = 2;
  int max_iter = 3000;
  double rel_change_tol = 1e-7;
  double dykstra_tol = 1e-3;
  int dykstra_max_iter = 50;
  double initial_step = 0.0;
  double shrink = 0.5;
  int power_iterations = 10;
  std::string boundary_scaling = "stacked";
  double compressibility_threshold = 1e-4;
  std::vector<double> tikhonov_lambdas;
  int tikhonov_max_iter = 500;
  double tikhonov_tol = 1e-10;
};

struct PathSection {
  std::string train_image;
  std::string exact_image;
  std::string workdir = "work";
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PatchSection, p, r, stride, max_patches, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LearnSection, s, lambda, rho, eps, max_iter, dykstra_max_iter,
                                   dykstra_tol, seed, lambdas)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TomoSection, num_angles, rays_per_angle, angle_start, angle_end,
                                   noise_level, seed, write_matrix)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReconSection, mu, delta, nu, max_iter, rel_change_tol, dykstra_tol,
                                   dykstra_max_iter, initial_step, shrink, power_iterations,
                                   boundary_scaling, compressibility_threshold, tikhonov_lambdas,
                                   tikhonov_max_iter, tikhonov_tol)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PathSection, train_image, exact_image, workdir)

struct RunConfig {
  PatchSection patches;
  LearnSection learn;
  TomoSection tomo;
  ReconSection recon;
  PathSection paths;

  DictLearnConfig learn_config() const {
    DictLearnConfig c;
    c.s = learn.s;
    c.lambda = learn.lambda;
    c.rho = learn.rho;
    c.eps = learn.eps;
    c.max_iter = learn.max_iter;
    c.dykstra_max_iter = learn.dykstra_max_iter;
    c.dykstra_tol = learn.dykstra_tol;
    c.seed = learn.seed;
    return c;
  }

  ReconConfig recon_config() const {
    ReconConfig c;
    c.mu = recon.mu;
    c.delta = recon.delta;
    c.prior = recon.nu == 1 ? Prior::kSparse : Prior::kSparseLowRank;
    c.max_iter = recon.max_iter;
    c.rel_change_tol = recon.rel_change_tol;
    c.dykstra_tol = recon.dykstra_tol;
    c.dykstra_max_iter = recon.dykstra_max_iter;
    c.initial_step = recon.initial_step;
    c.shrink = recon.shrink;
    c.power_iterations = recon.power_iterations;
    c.boundary_scaling =
        recon.boundary_scaling == "penalty" ? BoundaryScaling::kPenalty : BoundaryScaling::kStacked;
    return c;
  }

  /// Geometry for a square n_side image.
  ParallelGeometry geometry(Index n_side) const {
    return {n_side, tomo.num_angles, tomo.rays_per_angle, tomo.angle_start, tomo.angle_end};
  }

  /// Checks that need no input files. Image-dependent checks (p | M, r | N)
  /// happen when a stage loads its image.
  void validate() const {
    auto wrap = [](const char* section, auto&& check) {
      try {
        check();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string(section) + ": " + e.what());
      }
    };
    if (patches.p < 1 || patches.r < 1) throw ConfigError("patches: p and r must be >= 1");
    if (patches.stride < 1) throw ConfigError("patches: stride must be >= 1");
    if (patches.max_patches < 0) throw ConfigError("patches: max_patches must be >= 0 (0 keeps all)");
    wrap("learn", [&] { learn_config().validate(); });
    for (double l : learn.lambdas)
      if (!(l >= 0)) throw ConfigError("learn: sweep lambdas must be >= 0");
    wrap("tomo", [&] { geometry(1).validate(); });
    if (!(tomo.noise_level >= 0)) throw ConfigError("tomo: noise_level must be >= 0");
    if (recon.nu != 1 && recon.nu != 2)
      throw ConfigError("recon: nu must be 1 (sparse) or 2 (sparse + low rank), got " +
                        std::to_string(recon.nu));
    if (recon.boundary_scaling != "stacked" && recon.boundary_scaling != "penalty")
      throw ConfigError("recon: boundary_scaling must be \"stacked\" or \"penalty\"");
    if (!(recon.compressibility_threshold >= 0))
      throw ConfigError("recon: compressibility_threshold must be >= 0");
    for (double l : recon.tikhonov_lambdas)
      if (!(l > 0)) throw ConfigError("recon: tikhonov_lambdas must be > 0");
    if (recon.tikhonov_max_iter < 1 || !(recon.tikhonov_tol > 0))
      throw ConfigError("recon: tikhonov solver settings must be positive");
    wrap("recon", [&] { recon_config().validate(); });
    if (paths.workdir.empty()) throw ConfigError("paths: workdir must not be empty");
  }
};

inline void to_json(Json& j, const RunConfig& c) {
  j = Json{{"patches", c.patches}, {"learn", c.learn}, {"tomo", c.tomo}, {"recon", c.recon}, {"paths", c.paths}};
}

namespace detail {

/// Copies `src` into `dst`, refusing keys that `dst` (the defaults) lacks.
inline void merge_known(Json& dst, const Json& src, const std::string& where) {
  if (!src.is_object()) throw ConfigError((where.empty() ? "config" : where) + " must be a JSON object");
  for (auto it = src.begin(); it != src.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!dst.contains(it.key())) throw ConfigError("unknown config key \"" + key + "\"");
    Json& slot = dst[it.key()];
    if (slot.is_object())
      merge_known(slot, it.value(), key);
    else
      slot = it.value();
  }
}

template <class Section>
void read_section(const Json& j, const char* name, Section& out) {
  try {
    j.at(name).get_to(out);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config section \"") + name + "\": " + e.what());
  }
}

}  // namespace detail

/// "section.key=value"; the value is parsed as JSON when possible and taken
/// as a string otherwise.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override \"" + assignment + "\" is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &doc;
  std::stringstream ss(path);
  std::string part, seen;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    seen += (i ? "." : "") + parts[i];
    if (!node->is_object() || !node->contains(parts[i]))
      throw ConfigError("unknown config key \"" + seen + "\" in override");
    node = &(*node)[parts[i]];
  }
  if (node->is_object()) throw ConfigError("override \"" + path + "\" names a section, not a key");
  *node = std::move(value);
}

/// Defaults, then `user` (may be null), then overrides, then validation.
inline RunConfig parse_config(const Json& user, const std::vector<std::string>& overrides = {}) {
  Json doc = RunConfig{};
  if (!user.is_null()) detail::merge_known(doc, user, "");
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig c;
  detail::read_section(doc, "patches", c.patches);
  detail::read_section(doc, "learn", c.learn);
  detail::read_section(doc, "tomo", c.tomo);
  detail::read_section(doc, "recon", c.recon);
  detail::read_section(doc, "paths", c.paths);
  c.validate();
  return c;
}

/// Loads a config file. Relative paths inside it are taken relative to the
/// file's directory.
inline RunConfig load_config(const std::filesystem::path& file,
                             const std::vector<std::string>& overrides = {}) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open config file " + file.string());
  Json user;
  try {
    user = Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file " + file.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c = parse_config(user, overrides);
  const auto base = file.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.paths.train_image);
  resolve(c.paths.exact_image);
  resolve(c.paths.workdir);
  return c;
}

}  // namespace tpc
