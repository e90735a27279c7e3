#pragma once

// The command-line stages. Each reads the run config plus the files written
// by earlier stages under the work directory, and writes its own outputs:
//
//   patches/  Y.tns, manifest.json
//   dict/     D.tns, H.tns, history.csv, manifest.json
//   sino/     clean.f64, noisy.f64, noisy.csv, manifest.json [, A.mtx]
//   recon/    x_nu<k>.tns, x_nu<k>.pgm, C_nu<k>.tns, diagnostics_nu<k>.csv,
//             manifest_nu<k>.json [, tikhonov.pgm]
//   reports/  lambda_sweep.csv, metrics_nu<k>.csv, tikhonov.csv, mae.csv,
//             mae.json, evaluation_nu<k>.csv
//
// Outputs carry no timestamps, so reruns are byte-identical.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpc/config.hpp"
#include "tpc/dict_learn.hpp"
#include "tpc/image.hpp"
#include "tpc/metrics.hpp"
#include "tpc/patch.hpp"
#include "tpc/recon.hpp"
#include "tpc/sparse.hpp"
#include "tpc/tns_io.hpp"
#include "tpc/tomo.hpp"

namespace tpc {

namespace fs = std::filesystem;

struct Workdir {
  fs::path root;

  fs::path patches() const { return root / "patches"; }
  fs::path dict() const { return root / "dict"; }
  fs::path sino() const { return root / "sino"; }
  fs::path recon() const { return root / "recon"; }
  fs::path reports() const { return root / "reports"; }

  std::string nu_tag(int nu) const { return "_nu" + std::to_string(nu); }
  fs::path recon_image(int nu) const { return recon() / ("x" + nu_tag(nu) + ".tns"); }
  fs::path recon_pgm(int nu) const { return recon() / ("x" + nu_tag(nu) + ".pgm"); }
  fs::path recon_coeffs(int nu) const { return recon() / ("C" + nu_tag(nu) + ".tns"); }
  fs::path recon_diag(int nu) const { return recon() / ("diagnostics" + nu_tag(nu) + ".csv"); }
  fs::path recon_manifest(int nu) const { return recon() / ("manifest" + nu_tag(nu) + ".json"); }
  fs::path metrics(int nu) const { return reports() / ("metrics" + nu_tag(nu) + ".csv"); }
  fs::path evaluation(int nu) const { return reports() / ("evaluation" + nu_tag(nu) + ".csv"); }
};

namespace detail {

inline void ensure_dir(const fs::path& d) {
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw InvalidArgument("cannot create directory " + d.string() + ": " + ec.message());
}

inline void write_text(const fs::path& path, const std::string& text) {
  ensure_dir(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
  os << text;
}

inline void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("missing " + path.string() + "; run the earlier stage first");
  return Json::parse(is);
}

inline fs::path require_file(const fs::path& path, const char* stage) {
  if (!fs::exists(path))
    throw InvalidArgument("missing " + path.string() + "; run `tpc " + stage + "` first");
  return path;
}

inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

inline GrayImage load_config_image(const std::string& path, const char* key) {
  if (path.empty()) throw ConfigError(std::string("paths.") + key + " is not set");
  if (!fs::exists(path)) throw ConfigError(std::string("paths.") + key + ": file " + path + " does not exist");
  return load_image(path);
}

/// Patch layout of `img`, as a config error when p or r does not divide it.
inline PatchGeometry patch_geometry(const RunConfig& cfg, const GrayImage& img) {
  const Index p = cfg.patches.p, r = cfg.patches.r;
  if (img.height() % p != 0 || img.width() % r != 0)
    throw ConfigError("image is " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                      " but patches are " + std::to_string(p) + "x" + std::to_string(r) +
                      "; patches.p must divide the height and patches.r the width");
  return PatchGeometry(p, r, img.height(), img.width());
}

inline Index square_side(const GrayImage& img) {
  if (img.height() != img.width())
    throw ConfigError("the tomography simulator needs a square image, got " + std::to_string(img.height()) +
                      "x" + std::to_string(img.width()));
  return img.height();
}

inline Tensor3 load_dictionary(const Workdir& wd, const RunConfig& cfg) {
  const Tensor3 d = load_tns(require_file(wd.dict() / "D.tns", "learn"));
  if (d.rows() != cfg.patches.p || d.tubes() != cfg.patches.r)
    throw ConfigError("dictionary " + d.shape_string() + " does not match patches.p=" +
                      std::to_string(cfg.patches.p) + ", patches.r=" + std::to_string(cfg.patches.r));
  return d;
}

struct LearnRun {
  DictLearnResult result;
  double residual_fro = 0.0;
  double h_sum = 0.0;
};

inline LearnRun run_learning(const Tensor3& y, DictLearnConfig lc) {
  LearnRun run;
  run.result = learn_dictionary(y, lc);
  run.residual_fro = fro_norm(y - tprod(run.result.D, run.result.H));
  run.h_sum = norms(run.result.H).sum;
  return run;
}

inline void save_learning(const Workdir& wd, const LearnRun& run, double lambda, const std::string& source) {
  ensure_dir(wd.dict());
  save_tns(wd.dict() / "D.tns", run.result.D);
  save_tns(wd.dict() / "H.tns", run.result.H);
  std::ostringstream hist;
  hist << "iter,objective,kkt1,kkt2,kkt3,kkt4\n";
  for (std::size_t k = 0; k < run.result.kkt_history.size(); ++k) {
    hist << k + 1 << "," << num(run.result.objective_history[k]);
    for (double v : run.result.kkt_history[k].values) hist << "," << num(v);
    hist << "\n";
  }
  write_text(wd.dict() / "history.csv", hist.str());
  write_json(wd.dict() / "manifest.json",
             Json{{"lambda", lambda},
                  {"source", source},
                  {"s", run.result.D.cols()},
                  {"p", run.result.D.rows()},
                  {"r", run.result.D.tubes()},
                  {"iterations", run.result.iterations},
                  {"converged", run.result.converged},
                  {"objective", run.result.objective_history.empty() ? 0.0 : run.result.objective_history.back()},
                  {"residual_fro", run.residual_fro},
                  {"h_sum", run.h_sum},
                  {"h_all_zero", max_norm(run.result.H) == 0.0}});
}

}  // namespace detail

struct ExtractSummary {
  Index t = 0, p = 0, r = 0;
};

inline ExtractSummary cmd_extract(const RunConfig& cfg) {
  const Workdir wd{cfg.paths.workdir};
  const GrayImage img = detail::load_config_image(cfg.paths.train_image, "train_image");
  if (cfg.patches.p > img.height() || cfg.patches.r > img.width())
    throw ConfigError("patches are larger than the training image");
  const Tensor3 y = extract_training_patches(img, cfg.patches.p, cfg.patches.r, cfg.patches.stride,
                                             cfg.patches.max_patches, cfg.patches.seed);
  detail::ensure_dir(wd.patches());
  save_tns(wd.patches() / "Y.tns", y);
  detail::write_json(wd.patches() / "manifest.json",
                     Json{{"t", y.cols()},
                          {"p", y.rows()},
                          {"r", y.tubes()},
                          {"stride", cfg.patches.stride},
                          {"max_patches", cfg.patches.max_patches},
                          {"seed", cfg.patches.seed},
                          {"image", fs::path(cfg.paths.train_image).filename().string()}});
  return {y.cols(), y.rows(), y.tubes()};
}

struct LearnSummary {
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double residual_fro = 0.0;
  double h_sum = 0.0;
  bool h_all_zero = false;
};

inline LearnSummary cmd_learn(const RunConfig& cfg) {
  const Workdir wd{cfg.paths.workdir};
  const Tensor3 y = load_tns(detail::require_file(wd.patches() / "Y.tns", "extract"));
  const auto run = detail::run_learning(y, cfg.learn_config());
  detail::save_learning(wd, run, cfg.learn.lambda, "learn");
  const auto& r = run.result;
  return {r.iterations, r.converged, r.objective_history.empty() ? 0.0 : r.objective_history.back(),
          run.residual_fro, run.h_sum, max_norm(r.H) == 0.0};
}

struct SweepRow {
  double lambda = 0.0;
  double residual_fro = 0.0;
  double h_sum = 0.0;
  double criterion = 0.0;  // h_sum^2 + residual_fro^2
  int iterations = 0;
  bool converged = false;
  bool h_all_zero = false;
};

struct SweepSummary {
  std::vector<SweepRow> rows;  // ascending lambda
  double selected_lambda = 0.0;
};

/// Index of the row minimizing ||H||_sum^2 + ||Y - D*H||_F^2. A row whose H
/// is identically zero is only eligible when every row has a zero H: there
/// D is fixed by the constraints alone and the criterion collapses to
/// ||Y||_F^2 whatever the data.
inline std::size_t select_sweep_row(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw InvalidArgument("select_sweep_row: no rows");
  const bool any_nonzero = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.h_all_zero; });
  std::size_t best = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (any_nonzero && rows[i].h_all_zero) continue;
    if (best == rows.size() || rows[i].criterion < rows[best].criterion) best = i;
  }
  return best;
}

/// Learns one dictionary per lambda and keeps the one minimizing
/// ||H||_sum^2 + ||Y - D*H||_F^2 (see select_sweep_row); its D and H are
/// written to dict/.
inline SweepSummary cmd_lambda_sweep(const RunConfig& cfg, std::vector<double> lambdas) {
  if (lambdas.size() < 2) throw ConfigError("lambda sweep needs at least two values (learn.lambdas)");
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
  const Workdir wd{cfg.paths.workdir};
  const Tensor3 y = load_tns(detail::require_file(wd.patches() / "Y.tns", "extract"));

  SweepSummary out;
  std::vector<detail::LearnRun> runs;
  for (double lambda : lambdas) {
    DictLearnConfig lc = cfg.learn_config();
    lc.lambda = lambda;
    auto run = detail::run_learning(y, lc);
    out.rows.push_back(SweepRow{lambda, run.residual_fro, run.h_sum,
                                run.h_sum * run.h_sum + run.residual_fro * run.residual_fro,
                                run.result.iterations, run.result.converged, run.h_sum == 0.0});
    runs.push_back(std::move(run));
  }
  const std::size_t best = select_sweep_row(out.rows);
  out.selected_lambda = out.rows[best].lambda;
  std::ostringstream csv;
  csv << "lambda,residual_fro,h_sum,criterion,iterations,converged,h_all_zero,selected\n";
  for (const auto& r : out.rows)
    csv << detail::num(r.lambda) << "," << detail::num(r.residual_fro) << "," << detail::num(r.h_sum) << ","
        << detail::num(r.criterion) << "," << r.iterations << "," << (r.converged ? 1 : 0) << ","
        << (r.h_all_zero ? 1 : 0) << "," << (r.lambda == out.selected_lambda ? 1 : 0) << "\n";
  detail::write_text(wd.reports() / "lambda_sweep.csv", csv.str());
  detail::save_learning(wd, runs[best], out.selected_lambda, "sweep");
  return out;
}

struct SimulateSummary {
  Index rows = 0;
  double clean_norm = 0.0;
  double realized_noise = 0.0;
};

inline SimulateSummary cmd_simulate(const RunConfig& cfg) {
  const Workdir wd{cfg.paths.workdir};
  const GrayImage exact = detail::load_config_image(cfg.paths.exact_image, "exact_image");
  const ParallelGeometry geom = cfg.geometry(detail::square_side(exact));
  const SparseSystemMatrix a = build_parallel_matrix(geom);
  const Vector clean = forward_project(a, exact.vec());
  const Vector noisy = add_relative_gaussian_noise(clean, cfg.tomo.noise_level, cfg.tomo.seed);
  const double realized = clean.norm() > 0 ? (noisy - clean).norm() / clean.norm() : 0.0;

  detail::ensure_dir(wd.sino());
  save_sinogram_raw(wd.sino() / "clean.f64", clean);
  save_sinogram_raw(wd.sino() / "noisy.f64", noisy);
  save_sinogram_csv(wd.sino() / "noisy.csv", Sinogram{noisy, geom, cfg.tomo.noise_level, cfg.tomo.seed});
  if (cfg.tomo.write_matrix) save_matrix_market(wd.sino() / "A.mtx", a);
  detail::write_json(wd.sino() / "manifest.json",
                     Json{{"rows", a.rows()},
                          {"cols", a.cols()},
                          {"n_side", geom.n_side},
                          {"num_angles", geom.num_angles},
                          {"rays_per_angle", geom.rays_per_angle},
                          {"angle_start", geom.angle_start},
                          {"angle_end", geom.angle_end},
                          {"noise_level", cfg.tomo.noise_level},
                          {"realized_noise", realized},
                          {"seed", cfg.tomo.seed}});
  return {a.rows(), clean.norm(), realized};
}

struct TikhonovRow {
  double lambda = 0.0;
  int iterations = 0;
  double re = 0.0;
  double ssim = 0.0;
};

struct ReconstructSummary {
  MetricsReport metrics;
  bool converged = false;
  std::string prior;
  std::vector<TikhonovRow> tikhonov;  // empty unless recon.tikhonov_lambdas is set
  double best_tikhonov_re = std::numeric_limits<double>::quiet_NaN();
};

inline ReconstructSummary cmd_reconstruct(const RunConfig& cfg) {
  const Workdir wd{cfg.paths.workdir};
  const GrayImage exact = detail::load_config_image(cfg.paths.exact_image, "exact_image");
  const PatchGeometry pg = detail::patch_geometry(cfg, exact);
  const ParallelGeometry geom = cfg.geometry(detail::square_side(exact));
  const Tensor3 d = detail::load_dictionary(wd, cfg);
  const Vector b = load_sinogram_raw(detail::require_file(wd.sino() / "noisy.f64", "simulate"));
  SparseSystemMatrix a = build_parallel_matrix(geom);
  if (b.size() != a.rows())
    throw ConfigError("sinogram has " + std::to_string(b.size()) + " values but the tomo section gives " +
                      std::to_string(a.rows()) + " rays; rerun `tpc simulate`");

  const ReconConfig rc = cfg.recon_config();
  const ReconProblem problem(a, b, d, pg);
  const ReconResult res = reconstruct(problem, rc);
  const int nu = cfg.recon.nu;

  ReconstructSummary out;
  out.converged = res.diagnostics.converged;
  out.prior = res.diagnostics.prior;
  out.metrics.re = relative_error(res.x.vec(), exact.vec());
  out.metrics.ssim = ssim(res.x, exact);
  out.metrics.density_percent = density(res.c);
  out.metrics.compressibility_percent = compressibility(res.c, cfg.recon.compressibility_threshold);
  out.metrics.iterations = res.diagnostics.iterations;

  detail::ensure_dir(wd.recon());
  save_tns(wd.recon_image(nu), Tensor3(exact.height(), exact.width(), 1,
                                       std::vector<double>(res.x.pixels.data(),
                                                           res.x.pixels.data() + res.x.pixels.size())));
  save_pgm(wd.recon_pgm(nu), res.x);
  save_tns(wd.recon_coeffs(nu), res.c);
  std::ostringstream diag;
  diag << "iter,objective,step,relative_change\n";
  for (std::size_t k = 0; k < res.diagnostics.objective.size(); ++k)
    diag << k + 1 << "," << detail::num(res.diagnostics.objective[k]) << ","
         << detail::num(res.diagnostics.step_size[k]) << "," << detail::num(res.diagnostics.relative_change[k])
         << "\n";
  detail::write_text(wd.recon_diag(nu), diag.str());
  detail::write_json(wd.recon_manifest(nu), Json{{"prior", out.prior},
                                                 {"nu", nu},
                                                 {"mu", rc.mu},
                                                 {"delta", rc.delta},
                                                 {"iterations", res.diagnostics.iterations},
                                                 {"accepted_steps", res.diagnostics.objective.size()},
                                                 {"restarts", res.diagnostics.restarts},
                                                 {"backtracks", res.diagnostics.backtracks},
                                                 {"converged", out.converged}});
  detail::write_text(wd.metrics(nu), "prior,mu,delta," + MetricsReport::csv_header() + "\n" + out.prior + "," +
                                         detail::num(rc.mu) + "," + detail::num(rc.delta) + "," +
                                         out.metrics.csv_row() + "\n");

  if (!cfg.recon.tikhonov_lambdas.empty()) {
    detail::ensure_dir(wd.reports());
    std::ostringstream csv;
    csv << "lambda,iterations,re_percent,ssim\n";
    GrayImage best_img;
    for (double lam : cfg.recon.tikhonov_lambdas) {
      const TikhonovResult t = tikhonov_solve(a, b, lam, cfg.recon.tikhonov_max_iter, cfg.recon.tikhonov_tol);
      const GrayImage img = GrayImage::from_vec(t.x, exact.height(), exact.width());
      const TikhonovRow row{lam, t.iterations, relative_error(t.x, exact.vec()), ssim(img, exact)};
      out.tikhonov.push_back(row);
      csv << detail::num(lam) << "," << row.iterations << "," << detail::num(100.0 * row.re) << ","
          << detail::num(row.ssim) << "\n";
      if (!(row.re >= out.best_tikhonov_re)) {
        out.best_tikhonov_re = row.re;
        best_img = img;
      }
    }
    detail::write_text(wd.reports() / "tikhonov.csv", csv.str());
    save_pgm(wd.recon() / "tikhonov.pgm", best_img);
  }
  return out;
}

struct MaeSummary {
  double mae = 0.0;
  Index q = 0;
};

inline MaeSummary cmd_mae(const RunConfig& cfg) {
  const Workdir wd{cfg.paths.workdir};
  const GrayImage exact = detail::load_config_image(cfg.paths.exact_image, "exact_image");
  const PatchGeometry pg = detail::patch_geometry(cfg, exact);
  const Tensor3 d = detail::load_dictionary(wd, cfg);
  const MaeResult res = mean_approx_error(d, partition_image(exact, pg));
  std::ostringstream csv;
  csv << "patch,error_fro\n";
  for (std::size_t j = 0; j < res.patch_errors.size(); ++j) csv << j << "," << detail::num(res.patch_errors[j]) << "\n";
  detail::write_text(wd.reports() / "mae.csv", csv.str());
  detail::write_json(wd.reports() / "mae.json", Json{{"mae", res.mae}, {"s", d.cols()}, {"q", pg.q()}});
  return {res.mae, pg.q()};
}

/// Recomputes the metrics of a stored reconstruction against the exact image.
inline MetricsReport cmd_evaluate(const RunConfig& cfg) {
  const Workdir wd{cfg.paths.workdir};
  const int nu = cfg.recon.nu;
  const GrayImage exact = detail::load_config_image(cfg.paths.exact_image, "exact_image");
  const Tensor3 xt = load_tns(detail::require_file(wd.recon_image(nu), "reconstruct"));
  const Tensor3 c = load_tns(detail::require_file(wd.recon_coeffs(nu), "reconstruct"));
  if (xt.rows() != exact.height() || xt.cols() != exact.width() || xt.tubes() != 1)
    throw ConfigError("stored reconstruction " + xt.shape_string() + " does not match the exact image");
  const GrayImage x(Eigen::Map<const Matrix>(xt.flat().data(), xt.rows(), xt.cols()));
  const Json manifest = detail::read_json(wd.recon_manifest(nu));

  MetricsReport m;
  m.re = relative_error(x.vec(), exact.vec());
  m.ssim = ssim(x, exact);
  m.density_percent = density(c);
  m.compressibility_percent = compressibility(c, cfg.recon.compressibility_threshold);
  m.iterations = manifest.at("iterations").get<int>();
  detail::write_text(wd.evaluation(nu), MetricsReport::csv_header() + "\n" + m.csv_row() + "\n");
  return m;
}

}  // namespace tpc
