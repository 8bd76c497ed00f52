#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vimix/attack.hpp"
#include "vimix/calibration.hpp"
#include "vimix/image.hpp"
#include "vimix/mixer.hpp"
#include "vimix/rng.hpp"
#include "vimix/stadam.hpp"
#include "vimix/synth.hpp"
#include "vimix/vfe.hpp"

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0x5eed0001;
  int threads = 1;
  bool verbose = false;
};

std::string derive_master_seed_hex(std::uint64_t seed) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (int w = 0; w < 4; ++w) {
    const std::uint64_t v = vimix::mix64(seed, static_cast<std::uint64_t>(w), 0x3a57ULL);
    for (int i = 15; i >= 0; --i) s += digits[(v >> (4 * i)) & 0xf];
  }
  return s;
}

void log_note(const GlobalOpts& g, const std::string& msg) {
  if (g.verbose) std::cerr << "vimix: " << msg << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VFE-guided keyed pixel shuffling for visual privacy"};
  app.require_subcommand(1);
  app.set_config("--config")->description("flat key=value config file; flags override");

  GlobalOpts global;
  app.add_option("--seed", global.seed, "base seed for all randomized subcommands");
  app.add_option("--threads", global.threads, "dataset-level parallelism (default 1)");
  app.add_flag("--verbose", global.verbose, "log progress to stderr");

  // ---- vfe ----
  auto* vfe_cmd = app.add_subcommand("vfe", "per-region VFE report for one image");
  std::string vfe_in;
  int vfe_ws = 8;
  double vfe_scale = 1.0;
  vfe_cmd->add_option("--in", vfe_in, "input image (png/bmp/jpeg)")->required();
  vfe_cmd->add_option("--ws", vfe_ws, "window size");
  vfe_cmd->add_option("--scale-factor", vfe_scale, "F in the image-level normalization");

  // ---- calibrate ----
  auto* cal_cmd = app.add_subcommand("calibrate", "window-size bounds from d/alpha and target VFE");
  vimix::CalibrationInputs cal;
  std::string alpha0_method = "extremal";
  cal_cmd->add_option("--d", cal.d, "output-deviation threshold");
  cal_cmd->add_option("--alpha", cal.alpha, "whole-map confidence");
  cal_cmd->add_option("--mu-w", cal.kernel.mu_w, "kernel weight mean");
  cal_cmd->add_option("--sigma-w", cal.kernel.sigma_w, "kernel weight std");
  cal_cmd->add_option("--target-vfe", cal.target_vfe, "required shuffled VFE");
  cal_cmd->add_option("--q", cal.q, "quantile for the lower bound");
  cal_cmd->add_option("--n", cal.samples, "Monte-Carlo sample count");
  cal_cmd->add_option("--width", cal.width, "image width for the lower bound");
  cal_cmd->add_option("--height", cal.height, "image height for the lower bound");
  cal_cmd->add_option("--alpha0-method", alpha0_method, "extremal | table-sampled")
      ->check(CLI::IsMember({"extremal", "table-sampled"}));

  // ---- table1 ----
  auto* table_cmd = app.add_subcommand("table1", "pooled-output induction table");

  // ---- obfuscate ----
  auto* obf_cmd = app.add_subcommand("obfuscate", "shuffle every image in a directory");
  std::string obf_in, obf_out, obf_key_file, obf_master_seed, obf_plans_dir;
  vimix::DatasetConfig ds;
  obf_cmd->add_option("--in", obf_in, "input directory")->required();
  obf_cmd->add_option("--out", obf_out, "output directory")->required();
  obf_cmd->add_option("--key-file", obf_key_file, "key file path (default <out>/vimix.key)");
  obf_cmd->add_option("--master-seed", obf_master_seed, "256-bit master seed, 64 hex chars");
  obf_cmd->add_option("--target-vfe", ds.target_vfe, "required shuffled VFE");
  obf_cmd->add_option("--alpha", ds.alpha, "whole-map confidence");
  obf_cmd->add_option("--d", ds.d, "output-deviation threshold");
  obf_cmd->add_option("--q", ds.q, "quantile for the lower bound");
  obf_cmd->add_option("--mu-w", ds.kernel.mu_w, "kernel weight mean");
  obf_cmd->add_option("--sigma-w", ds.kernel.sigma_w, "kernel weight std");
  obf_cmd->add_option("--n", ds.alpha0_samples, "alpha0 Monte-Carlo samples");
  obf_cmd->add_option("--plans-dir", obf_plans_dir, "also write per-image plan files here");
  obf_cmd->add_flag("--channel-rotation", ds.channel_rotation,
                    "experimental: permute channel values at fixed positions");

  // ---- invert ----
  auto* inv_cmd = app.add_subcommand("invert", "test mode: undo a shuffle from its plan");
  std::string inv_in, inv_plan, inv_out;
  inv_cmd->add_option("--in", inv_in, "shuffled png")->required();
  inv_cmd->add_option("--plan", inv_plan, "plan file written by obfuscate --plans-dir")->required();
  inv_cmd->add_option("--out", inv_out, "restored png")->required();

  // ---- optim-bench ----
  auto* opt_cmd = app.add_subcommand("optim-bench", "optimizer trajectories and comparison");
  std::string opt_name = "st-adam", opt_profile = "quadratic";
  vimix::StAdamParams opt_params;
  opt_cmd->add_option("--optimizer", opt_name, "st-adam | adam")
      ->check(CLI::IsMember({"st-adam", "adam"}));
  opt_cmd->add_option("--eta", opt_params.eta, "learning rate");
  opt_cmd->add_option("--beta", opt_params.beta, "momentum decay");
  opt_cmd->add_option("--gamma", opt_params.gamma, "second-moment decay");
  opt_cmd->add_option("--eps", opt_params.epsilon, "denominator smoothing");
  opt_cmd->add_option("--profile", opt_profile, "quadratic | rosenbrock | oscillation")
      ->check(CLI::IsMember({"quadratic", "rosenbrock", "oscillation"}));

  // ---- attack ----
  auto* atk_cmd = app.add_subcommand("attack", "min-VFE recovery attack");
  std::string atk_in, atk_truth, atk_out;
  std::vector<int> atk_ws{2};
  int atk_channel = 0;
  atk_cmd->add_option("--in", atk_in, "shuffled image, or a corpus directory for a sweep")
      ->required();
  atk_cmd->add_option("--truth", atk_truth, "ground-truth image for recovery measurement");
  atk_cmd->add_option("--ws", atk_ws, "attacked window size(s)");
  atk_cmd->add_option("--channel", atk_channel, "channel to attack");
  atk_cmd->add_option("--out", atk_out, "write the reassembled candidate png here");

  // ---- gen-corpus ----
  auto* gen_cmd = app.add_subcommand("gen-corpus", "write a deterministic synthetic corpus");
  std::string gen_out;
  int gen_count = 20, gen_w = 32, gen_h = 32, gen_c = 1;
  gen_cmd->add_option("--out", gen_out, "output directory")->required();
  gen_cmd->add_option("--count", gen_count, "number of images");
  gen_cmd->add_option("--width", gen_w, "image width");
  gen_cmd->add_option("--height", gen_h, "image height");
  gen_cmd->add_option("--channels", gen_c, "1 or 3");

  // let global flags (--seed, --threads, ...) appear after the subcommand
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (vfe_cmd->parsed()) {
      const vimix::ImageTensor img = vimix::load_image(vfe_in);
      vimix::write_report(std::cout, vimix::vfe_report(img, vfe_ws, {vfe_scale}));
      return 0;
    }

    if (cal_cmd->parsed()) {
      cal.seed = global.seed;
      cal.table_sampled_alpha0 = alpha0_method == "table-sampled";
      std::cout << vimix::calibrate(cal).to_record() << "\n";
      return 0;
    }

    if (table_cmd->parsed()) {
      const vimix::InductionTable table = vimix::enumerate_induction_table();
      const long total = table.total();
      std::cout.setf(std::ios::fixed);
      for (int mask : vimix::InductionTable::row_order()) {
        std::cout.precision(1);
        std::cout << vimix::InductionTable::label(mask) << '\t' << table.counts[mask]
                  << '\t' << 100.0 * table.counts[mask] / static_cast<double>(total)
                  << "%\n";
      }
      std::cout << "total\t" << total << "\n";
      return 0;
    }

    if (obf_cmd->parsed()) {
      ds.threads = global.threads;
      ds.alpha0_seed = global.seed;
      ds.master_seed_hex =
          obf_master_seed.empty() ? derive_master_seed_hex(global.seed) : obf_master_seed;
      if (!obf_plans_dir.empty()) ds.plans_dir = obf_plans_dir;
      const std::filesystem::path key_file =
          obf_key_file.empty() ? std::filesystem::path(obf_out) / "vimix.key"
                               : std::filesystem::path(obf_key_file);
      log_note(global, "obfuscating " + obf_in + " -> " + obf_out);
      const vimix::DatasetSummary s = vimix::obfuscate_dataset(obf_in, obf_out, key_file, ds);
      std::cout << "processed=" << s.processed << "\nfailed=" << s.failed
                << "\nmean_vfe_before=" << s.mean_vfe_before
                << "\nmean_vfe_after=" << s.mean_vfe_after
                << "\nmean_ws_used=" << s.mean_ws_used << "\n";
      return s.failed == 0 ? 0 : 1;
    }

    if (inv_cmd->parsed()) {
      std::ifstream pf(inv_plan);
      if (!pf) throw std::runtime_error("cannot open plan file: " + inv_plan);
      const vimix::ShufflePlan plan = vimix::read_plan(pf);
      const vimix::ImageTensor shuffled = vimix::load_image(inv_in);
      vimix::save_image(vimix::invert_image(shuffled, plan), inv_out);
      return 0;
    }

    if (opt_cmd->parsed()) {
      const bool use_adam = opt_name == "adam";
      if (opt_profile == "oscillation") {
        std::cout << vimix::oscillation_benchmark(global.seed).to_text();
        return 0;
      }
      vimix::Objective objective;
      Eigen::VectorXd w0;
      long max_iters = 0;
      if (opt_profile == "quadratic") {
        objective = [](const Eigen::VectorXd& w, Eigen::VectorXd& g) {
          g = w;
          return 0.5 * w.squaredNorm();
        };
        w0 = Eigen::VectorXd::Constant(2, 5.0);
        max_iters = 5000;
      } else {  // rosenbrock
        objective = [](const Eigen::VectorXd& w, Eigen::VectorXd& g) {
          const double x = w[0], y = w[1];
          g.resize(2);
          g[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
          g[1] = 200.0 * (y - x * x);
          return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
        };
        w0 = Eigen::VectorXd(2);
        w0 << -1.2, 1.0;
        max_iters = 50000;
      }
      const vimix::Trajectory traj =
          vimix::optimize(objective, w0, opt_params, max_iters, 1e-10, use_adam);
      std::cout << "step,loss,grad_norm\n";
      std::cout.precision(12);
      for (long i = 0; i < traj.steps; ++i)
        std::cout << i << ',' << traj.loss[static_cast<std::size_t>(i)] << ','
                  << traj.grad_norm[static_cast<std::size_t>(i)] << "\n";
      return 0;
    }

    if (atk_cmd->parsed()) {
      if (std::filesystem::is_directory(atk_in)) {
        const auto rows = vimix::attack_sweep_dir(atk_in, atk_ws, global.seed, atk_channel);
        std::cout << vimix::sweep_table(rows);
        return 0;
      }
      const vimix::ImageTensor shuffled = vimix::load_image(atk_in);
      std::optional<vimix::ImageTensor> truth;
      if (!atk_truth.empty()) truth = vimix::load_image(atk_truth);
      for (int ws : atk_ws) {
        auto [candidate, rep] =
            vimix::min_vfe_attack(shuffled, ws, atk_channel, truth ? &*truth : nullptr);
        std::cout << rep.to_record() << "\n";
        if (!atk_out.empty() && atk_ws.size() == 1) vimix::save_image(candidate, atk_out);
      }
      return 0;
    }

    if (gen_cmd->parsed()) {
      std::filesystem::create_directories(gen_out);
      const auto corpus = vimix::synth_corpus(global.seed, gen_count, gen_w, gen_h, gen_c);
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%03zu.png", i);
        vimix::save_image(corpus[i], std::filesystem::path(gen_out) / name);
      }
      log_note(global, "wrote " + std::to_string(corpus.size()) + " images");
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
