// tpc: tensor dictionary learning and dictionary-regularized tomography.
//
//   tpc extract|learn|sweep|simulate|reconstruct|mae|evaluate --config run.json [--override key=value]...
//   tpc texture --out img.pgm [--size 64 --period 16 --seed 1 ...]
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "tpc/config.hpp"
#include "tpc/pipeline.hpp"
#include "tpc/texture.hpp"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--override", c.overrides, "override a config value, e.g. learn.lambda=0.5");
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

void print_metrics(const tpc::MetricsReport& m) {
  std::printf("RE %.2f%%  SSIM %.4f  density %.2f%%  compressibility %.2f%%  iterations %d\n", 100.0 * m.re,
              m.ssim, m.density_percent, m.compressibility_percent, m.iterations);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor dictionary learning and dictionary-regularized tomographic reconstruction"};
  app.require_subcommand(1);

  Common common;
  auto* extract = app.add_subcommand("extract", "extract training patches from paths.train_image");
  auto* learn = app.add_subcommand("learn", "learn a dictionary from the extracted patches");
  auto* sweep = app.add_subcommand("sweep", "learn over a lambda grid and keep the trade-off optimum");
  auto* simulate = app.add_subcommand("simulate", "simulate clean and noisy sinograms of paths.exact_image");
  auto* recon = app.add_subcommand("reconstruct", "reconstruct from the noisy sinogram");
  auto* mae = app.add_subcommand("mae", "mean approximation error of the exact image under the dictionary");
  auto* evaluate = app.add_subcommand("evaluate", "recompute metrics of the stored reconstruction");
  for (auto* cmd : {extract, learn, sweep, simulate, recon, mae, evaluate}) add_common(cmd, common);

  std::vector<double> lambdas;
  sweep->add_option("--lambdas", lambdas, "lambda grid (default: learn.lambdas)");

  auto* texture = app.add_subcommand("texture", "write a synthetic periodic texture as PGM");
  tpc::TextureSpec tex;
  std::string tex_out;
  texture->add_option("--out", tex_out, "output PGM")->required();
  texture->add_option("--size", tex.height, "image side")->default_val(64);
  texture->add_option("--period", tex.period, "tile period")->default_val(16);
  texture->add_option("--grains", tex.grains, "grains per tile")->default_val(6);
  texture->add_option("--sigma", tex.grain_sigma, "grain width (disk radius with --edge)")->default_val(2.0);
  texture->add_option("--edge", tex.edge, "disk rim width; 0 gives Gaussian grains")->default_val(0.0);
  texture->add_option("--shift-row", tex.shift_row, "row phase shift")->default_val(0);
  texture->add_option("--shift-col", tex.shift_col, "column phase shift")->default_val(0);
  texture->add_option("--noise", tex.noise, "additive noise std")->default_val(0.0);
  texture->add_option("--seed", tex.seed, "tile seed")->default_val(0);
  texture->add_option("--noise-seed", tex.noise_seed, "noise seed")->default_val(0);

  CLI11_PARSE(app, argc, argv);

  try {
    if (texture->parsed()) {
      tex.width = tex.height;
      tpc::save_pgm(tex_out, tpc::periodic_texture(tex));
      std::printf("wrote %s (%ldx%ld)\n", tex_out.c_str(), static_cast<long>(tex.height),
                  static_cast<long>(tex.width));
      return 0;
    }
    const tpc::RunConfig cfg = tpc::load_config(common.config, common.overrides);
    if (extract->parsed()) {
      const auto s = tpc::cmd_extract(cfg);
      std::printf("extracted t=%ld patches of %ldx%ld\n", static_cast<long>(s.t), static_cast<long>(s.p),
                  static_cast<long>(s.r));
    } else if (learn->parsed()) {
      const auto s = tpc::cmd_learn(cfg);
      std::printf("iterations %d  converged %s  objective %.6g  residual %.6g  |H|_sum %.6g%s\n", s.iterations,
                  yes_no(s.converged).c_str(), s.objective, s.residual_fro, s.h_sum,
                  s.h_all_zero ? "  (H is all zeros)" : "");
    } else if (sweep->parsed()) {
      const auto s = tpc::cmd_lambda_sweep(cfg, lambdas.empty() ? cfg.learn.lambdas : lambdas);
      for (const auto& r : s.rows)
        std::printf("lambda %-10.6g residual %-12.6g |H|_sum %-12.6g criterion %-12.6g%s%s\n", r.lambda,
                    r.residual_fro, r.h_sum, r.criterion, r.h_all_zero ? "  (H all zero)" : "",
                    r.lambda == s.selected_lambda ? "  <- selected" : "");
    } else if (simulate->parsed()) {
      const auto s = tpc::cmd_simulate(cfg);
      std::printf("m=%ld rays  |b|=%.6g  realized noise %.6g\n", static_cast<long>(s.rows), s.clean_norm,
                  s.realized_noise);
    } else if (recon->parsed()) {
      const auto s = tpc::cmd_reconstruct(cfg);
      std::printf("prior %s  converged %s\n", s.prior.c_str(), yes_no(s.converged).c_str());
      print_metrics(s.metrics);
      if (!s.tikhonov.empty()) std::printf("best Tikhonov RE %.2f%%\n", 100.0 * s.best_tikhonov_re);
    } else if (mae->parsed()) {
      const auto s = tpc::cmd_mae(cfg);
      std::printf("MAE %.6g over q=%ld patches\n", s.mae, static_cast<long>(s.q));
    } else if (evaluate->parsed()) {
      print_metrics(tpc::cmd_evaluate(cfg));
    }
  } catch (const tpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tpc::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tpc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
