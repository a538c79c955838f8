#include "sjscc/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "sjscc/checkpoint.hpp"
#include "sjscc/dataio.hpp"
#include "sjscc/evaluator.hpp"
#include "sjscc/report.hpp"
#include "sjscc/trainer.hpp"

namespace sjscc::cli {

namespace {

namespace fs = std::filesystem;

constexpr uint64_t kCliEvalStream = 7000;

/// Shared flags of every verb that builds a config from scratch.
struct ConfigArgs {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
  bool desk = false;
};

/// Shared output flags: --run-dir pins the exact directory, otherwise
/// <root>/<suite>/<timestamp>/ under --out, $SJSCC_RESULTS_ROOT or ./results.
struct OutArgs {
  std::string out_root;
  std::string run_dir;
};

ValidatedConfig resolve_vc(const ConfigArgs& a) {
  TrainingConfig cfg;
  ImageDims dims;
  if (!a.config_path.empty()) {
    const auto pf = load_config_file(a.config_path);
    cfg = pf.cfg;
    dims = pf.dims;
  }
  if (a.desk) apply_desk_preset(cfg);
  if (a.seed_set) cfg.seed = a.seed;
  return validate_config(cfg, dims);
}

fs::path pick_run_dir(const OutArgs& o, const char* suite) {
  if (!o.run_dir.empty()) return fs::path(o.run_dir);
  fs::path root;
  if (!o.out_root.empty()) {
    root = o.out_root;
  } else if (const char* env = std::getenv("SJSCC_RESULTS_ROOT")) {
    root = env;
  } else {
    root = "results";
  }
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  const fs::path base = root / suite / stamp;
  fs::path dir = base;
  for (int i = 2; fs::exists(dir); ++i)
    dir = fs::path(base.string() + "-" + std::to_string(i));
  return dir;
}

void write_snapshot(const fs::path& dir, const ValidatedConfig& vc) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.snapshot", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "config.snapshot").string());
  out << serialize_config(vc);
}

std::string data_dir_or_default(const std::string& flag) {
  return flag.empty() ? data::resolve_data_dir() : flag;
}

struct LoadedBundle {
  ValidatedConfig vc;
  train::ModelBundle bundle;
};

/// Rebuilds the models recorded in a checkpoint. A --seed override reseeds
/// evaluation streams only; the parameters come from the archive either way.
LoadedBundle load_bundle(const std::string& path, bool seed_set, uint64_t seed) {
  auto arch = ckpt::load_archive(path);
  auto vc = arch.config;
  if (seed_set && seed != vc.cfg.seed) {
    TrainingConfig cfg = vc.cfg;
    cfg.seed = seed;
    vc = validate_config(cfg, vc.dims);
  }
  LoadedBundle lb{vc, train::build_models(vc)};
  ckpt::load_params(arch, lb.bundle.encoder.net.params("encoder"));
  ckpt::load_params(arch, lb.bundle.decoder.net.params("decoder"));
  ckpt::load_params(arch, lb.bundle.ensemble.params());
  return lb;
}

ChannelSpec spec_from_flags(const std::string& family, double fig, double snr,
                            double power) {
  ChannelSpec s;
  s.family = family_from_name(family);
  s.nakagami_m = fig;
  s.snr_db = snr;
  s.power = power;
  return s;
}

nlohmann::json spec_json(const ChannelSpec& s) {
  return {{"family", family_name(s.family)},
          {"snr_db", s.snr_db},
          {"nakagami_m", s.nakagami_m},
          {"power", s.power}};
}

nlohmann::json metrics_json(const eval::PointMetrics& p) {
  return {{"samples", p.samples},
          {"mean_ssim", p.mean_ssim},
          {"ssim_se", p.ssim_se},
          {"mean_mse", p.mean_mse},
          {"mse_se", p.mse_se},
          {"solo_accuracy", p.solo_accuracy},
          {"mean_solo_accuracy", p.mean_solo_accuracy},
          {"solo_accuracy_se", p.solo_accuracy_se()},
          {"colluded_accuracy", p.colluded_accuracy},
          {"colluded_accuracy_se", p.colluded_accuracy_se()},
          {"bob", spec_json(p.bob_spec)},
          {"eve", spec_json(p.eve_spec)}};
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"secure deep joint source-channel coding of images over fading channels"};
  app.require_subcommand(1);

  ConfigArgs cfg_args;
  OutArgs out_args;
  std::string data_dir, checkpoint, resume;
  std::string channel = "rayleigh", suite, report_dir;
  double fading_m = 1.0, snr_bob = 20.0, snr_eve = 0.0;
  bool snr_eve_set = false;
  std::vector<double> snr_list = {5, 10, 15, 20, 25, 30};
  std::vector<double> alpha_list = {0.05, 0.1, 0.2};
  std::vector<double> w_list = {0, 1, 5};

  const auto add_config_flags = [&](CLI::App* sub) {
    sub->add_option("--config", cfg_args.config_path,
                    "config file; defaults reproduce the reference operating point");
    sub->add_option("--seed", cfg_args.seed, "override the rng seed for every stream")
        ->each([&](const std::string&) { cfg_args.seed_set = true; });
    sub->add_flag("--desk-scale", cfg_args.desk,
                  "apply the reduced desk-scale preset");
  };
  const auto add_out_flags = [&](CLI::App* sub) {
    sub->add_option("--out", out_args.out_root,
                    "results root (default $SJSCC_RESULTS_ROOT or ./results)");
    sub->add_option("--run-dir", out_args.run_dir,
                    "exact output directory, bypassing the timestamp layout");
  };
  const auto add_data_flag = [&](CLI::App* sub) {
    sub->add_option("--data", data_dir,
                    "dataset directory (default: $SJSCC_CIFAR_DIR or synthesized cache)");
  };
  const auto add_channel_flags = [&](CLI::App* sub) {
    sub->add_option("--channel", channel, "channel family: awgn, rayleigh, nakagami")
        ->check(CLI::IsMember({"awgn", "rayleigh", "nakagami"}));
    sub->add_option("--m", fading_m, "Nakagami fading figure");
  };

  auto* train_cmd = app.add_subcommand("train", "train a model, writing history and checkpoints");
  add_config_flags(train_cmd);
  add_out_flags(train_cmd);
  add_data_flag(train_cmd);
  auto* resume_opt =
      train_cmd->add_option("--resume", resume, "continue from a checkpoint archive");
  resume_opt->excludes(train_cmd->get_option("--config"));
  resume_opt->excludes(train_cmd->get_option("--desk-scale"));
  train_cmd->callback([&] {
    ValidatedConfig vc;
    ckpt::Archive arch;
    if (!resume.empty()) {
      arch = ckpt::load_archive(resume);
      vc = arch.config;
      if (cfg_args.seed_set && cfg_args.seed != vc.cfg.seed)
        throw std::invalid_argument(
            "--seed conflicts with the checkpoint; resume keeps the original seed");
    } else {
      vc = resolve_vc(cfg_args);
    }
    const auto dir = pick_run_dir(out_args, "train");
    auto ds = data::load_dataset(data_dir_or_default(data_dir), data::Split::Train,
                                 vc.cfg.subset_train);
    train::Trainer trainer(vc);
    if (!resume.empty()) trainer.restore(arch);
    trainer.train(ds, dir.string());
    std::printf("train: %ld episodes, %ld steps -> %s\n", trainer.episode(),
                trainer.step(), dir.string().c_str());
  });

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint at one channel point");
  eval_cmd->add_option("--checkpoint", checkpoint, "trained archive")->required();
  add_out_flags(eval_cmd);
  add_data_flag(eval_cmd);
  add_channel_flags(eval_cmd);
  eval_cmd->add_option("--snr-bob", snr_bob, "legitimate-link SNR in dB");
  eval_cmd->add_option("--snr-eve", snr_eve, "eavesdropper SNR in dB (default bob - 5)")
      ->each([&](const std::string&) { snr_eve_set = true; });
  eval_cmd->add_option("--seed", cfg_args.seed, "override the evaluation rng seed")
      ->each([&](const std::string&) { cfg_args.seed_set = true; });
  eval_cmd->callback([&] {
    auto lb = load_bundle(checkpoint, cfg_args.seed_set, cfg_args.seed);
    auto ds = data::load_dataset(data_dir_or_default(data_dir), data::Split::Test,
                                 lb.vc.cfg.subset_eval);
    const auto bob = spec_from_flags(channel, fading_m, snr_bob, lb.vc.cfg.power);
    auto eve = bob;
    eve.snr_db = snr_eve_set ? snr_eve : snr_bob - 5.0;
    const auto pm = eval::eval_point(lb.bundle, ds, bob, eve, lb.vc, kCliEvalStream);

    const auto dir = pick_run_dir(out_args, "eval");
    write_snapshot(dir, lb.vc);
    std::ofstream out(dir / "metrics.json", std::ios::binary);
    out << metrics_json(pm).dump(2) << '\n';
    std::printf("eval: ssim %.4f mse %.5f solo acc %.4f colluded %.4f -> %s\n",
                pm.mean_ssim, pm.mean_mse, pm.mean_solo_accuracy,
                pm.colluded_accuracy, dir.string().c_str());
  });

  auto* sweep_cmd = app.add_subcommand("sweep", "SNR sweep with eve held 5 dB below bob");
  sweep_cmd->add_option("--checkpoint", checkpoint, "trained archive")->required();
  add_out_flags(sweep_cmd);
  add_data_flag(sweep_cmd);
  add_channel_flags(sweep_cmd);
  sweep_cmd->add_option("--snr-list", snr_list, "bob SNRs in dB")
      ->delimiter(',');
  sweep_cmd->add_option("--seed", cfg_args.seed, "override the evaluation rng seed")
      ->each([&](const std::string&) { cfg_args.seed_set = true; });
  sweep_cmd->callback([&] {
    auto lb = load_bundle(checkpoint, cfg_args.seed_set, cfg_args.seed);
    auto ds = data::load_dataset(data_dir_or_default(data_dir), data::Split::Test,
                                 lb.vc.cfg.subset_eval);
    const auto tmpl = spec_from_flags(channel, fading_m, 0.0, lb.vc.cfg.power);
    const auto sr = eval::snr_sweep(lb.bundle, ds, tmpl, snr_list, lb.vc);

    const auto dir = pick_run_dir(out_args, "sweep");
    write_snapshot(dir, lb.vc);
    eval::emit_sweep(sr, dir.string());
    std::printf("sweep: %zu points, accuracy spearman %.3f range %.3f -> %s\n",
                sr.points.size(), sr.accuracy_spearman, sr.accuracy_range,
                dir.string().c_str());
  });

  auto* ablate_cmd = app.add_subcommand(
      "ablate", "train and evaluate matched secure/insecure cells");
  add_config_flags(ablate_cmd);
  add_out_flags(ablate_cmd);
  add_data_flag(ablate_cmd);
  ablate_cmd->callback([&] {
    const auto vc = resolve_vc(cfg_args);
    const auto ddir = data_dir_or_default(data_dir);
    auto train_ds = data::load_dataset(ddir, data::Split::Train, vc.cfg.subset_train);
    auto eval_ds = data::load_dataset(ddir, data::Split::Test, vc.cfg.subset_eval);
    const auto rep = eval::ablation_suite(train_ds, eval_ds, vc);

    const auto dir = pick_run_dir(out_args, "ablation");
    write_snapshot(dir, vc);
    eval::emit_ablation(rep, dir.string());
    std::printf("ablate: %zu cells, %zu gaps -> %s\n", rep.rows.size(),
                rep.gaps.size(), dir.string().c_str());
  });

  auto* surface_cmd = app.add_subcommand(
      "surface", "train one cell per (alpha, w) and map the trade-off");
  add_config_flags(surface_cmd);
  add_out_flags(surface_cmd);
  add_data_flag(surface_cmd);
  surface_cmd->add_option("--alpha-list", alpha_list, "distortion-mix grid")
      ->delimiter(',');
  surface_cmd->add_option("--w-list", w_list, "leakage-weight grid")->delimiter(',');
  surface_cmd->callback([&] {
    const auto vc = resolve_vc(cfg_args);
    const auto ddir = data_dir_or_default(data_dir);
    auto train_ds = data::load_dataset(ddir, data::Split::Train, vc.cfg.subset_train);
    auto eval_ds = data::load_dataset(ddir, data::Split::Test, vc.cfg.subset_eval);
    const auto sf = eval::tradeoff_surface(train_ds, eval_ds, alpha_list, w_list, vc);

    const auto dir = pick_run_dir(out_args, "surface");
    write_snapshot(dir, vc);
    eval::emit_surface(sf, dir.string());
    std::printf("surface: %zu cells -> %s\n", sf.cells.size(), dir.string().c_str());
  });

  auto* report_cmd = app.add_subcommand(
      "report", "regenerate tables and plots from a suite's data files");
  report_cmd->add_option("--suite", suite, "sweep, ablation or surface")
      ->required()
      ->check(CLI::IsMember({"sweep", "ablation", "surface"}));
  report_cmd->add_option("--dir", report_dir, "directory holding data.csv")->required();
  report_cmd->callback([&] {
    if (suite == "sweep") {
      eval::emit_sweep(eval::read_sweep(report_dir), report_dir);
    } else if (suite == "ablation") {
      eval::emit_ablation(eval::read_ablation(report_dir), report_dir);
    } else {
      eval::emit_surface(eval::read_surface(report_dir), report_dir);
    }
    std::printf("report: regenerated %s outputs in %s\n", suite.c_str(),
                report_dir.c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sjscc::cli
