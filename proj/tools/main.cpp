#include "commands.hpp"

#include "pzt/io.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>

using namespace pzt::cli;

namespace {

void camera_flags(CLI::App* app, CameraOptions& o) {
  app->add_option("--geometry", o.geometry, "Geometry JSON (overrides --rings/--pitch)");
  app->add_option("--rings", o.rings, "Hexagonal rings around the central pixel")->capture_default_str();
  app->add_option("--pitch", o.pitch, "Pixel pitch")->capture_default_str();
}

void cleaning_flags(CLI::App* app, CleaningOptions& o) {
  app->add_option("--core", o.core, "Core tail-cut threshold (phe)")->capture_default_str();
  app->add_option("--boundary", o.boundary, "Boundary tail-cut threshold (phe)")->capture_default_str();
}

void format_flags(CLI::App* app, FormatOverrides& o) {
  app->add_flag("--wide", o.wide, "Start from 64-bit Q24.40 everywhere");
  app->add_option("--basis-format", o.basis, "e.g. q2.30");
  app->add_option("--norm-format", o.norm, "normalizer mean and 1/std");
  app->add_option("--sv-format", o.sv);
  app->add_option("--dual-format", o.dual);
  app->add_option("--bias-format", o.bias);
  app->add_option("--gamma-format", o.gamma);
  app->add_option("--lut-format", o.lut);
  app->add_option("--lut-size", o.lut_size, "Exp LUT entries (power of two)")->capture_default_str();
  app->add_option("--pixel-format", o.pixel);
  app->add_option("--acc-format", o.acc);
  app->add_option("--feature-format", o.feature);
  app->add_option("--kernel-format", o.kernel, "exp argument and result");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-Zernike + SVM gamma/hadron trigger"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; command-line flags override it");
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "Print the effective configuration as TOML and exit");

  std::function<int()> action;

  GenOptions gen;
  auto* c = app.add_subcommand("gen", "Generate synthetic events (JSON Lines)");
  camera_flags(c, gen.camera);
  c->add_option("-o,--out", gen.out, "Events file ('-' for stdout)")->required();
  c->add_option("--geometry-out", gen.geometry_out, "Also write the camera geometry JSON");
  c->add_option("--gammas", gen.gammas)->capture_default_str();
  c->add_option("--hadrons", gen.hadrons)->capture_default_str();
  c->add_option("--seed", gen.seed)->capture_default_str();
  c->add_option("--first-id", gen.first_id, "Id of the first event")->capture_default_str();
  c->add_option("--noise-sigma", gen.noise_sigma, "Pedestal noise (phe); 0 disables")->capture_default_str();
  c->callback([&] { action = [&] { return run_gen(gen); }; });

  ExtractOptions ext;
  c = app.add_subcommand("extract", "Clean events and compute pseudo-Zernike features (CSV)");
  camera_flags(c, ext.camera);
  cleaning_flags(c, ext.cleaning);
  c->add_option("-i,--events", ext.events)->required();
  c->add_option("-o,--out", ext.out)->required();
  c->add_option("--n-max", ext.n_max, "Maximum order")->capture_default_str();
  c->add_option("--basis-out", ext.basis_out, "Also write the basis table (binary)");
  c->callback([&] { action = [&] { return run_extract(ext); }; });

  HillasOptions hil;
  c = app.add_subcommand("hillas", "Compute Hillas parameters of cleaned events (CSV)");
  camera_flags(c, hil.camera);
  cleaning_flags(c, hil.cleaning);
  c->add_option("-i,--events", hil.events)->required();
  c->add_option("-o,--out", hil.out)->required();
  c->callback([&] { action = [&] { return run_hillas(hil); }; });

  TrainOptions tr;
  c = app.add_subcommand("train", "Train an RBF SVM on a features file");
  c->add_option("-i,--features", tr.features)->required();
  c->add_option("-o,--out", tr.out, "Model JSON")->required();
  c->add_option("--C", tr.c)->capture_default_str();
  c->add_option("--gamma", tr.gamma)->capture_default_str();
  c->add_option("--tol", tr.tol)->capture_default_str();
  c->add_option("--max-passes", tr.max_passes)->capture_default_str();
  c->add_option("--seed", tr.seed)->capture_default_str();
  c->add_option("--cache-mb", tr.cache_mb, "Kernel cache budget")->capture_default_str();
  c->callback([&] { action = [&] { return run_train(tr); }; });

  GridOptions gr;
  c = app.add_subcommand("gridsearch", "Cross-validated grid search over log2 C and log2 gamma");
  c->add_option("-i,--features", gr.features)->required();
  c->add_option("-o,--out", gr.out, "Grid CSV")->required();
  c->add_option("--model-out", gr.model_out, "Train on the full set at the best cell and write the model");
  c->add_option("--c-range", gr.c_range, "log2 C as lo:hi:step")->capture_default_str();
  c->add_option("--gamma-range", gr.gamma_range, "log2 gamma as lo:hi:step")->capture_default_str();
  c->add_option("--fine-radius", gr.fine_radius, "0 disables refinement")->capture_default_str();
  c->add_option("--fine-step", gr.fine_step)->capture_default_str();
  c->add_option("--folds", gr.folds)->capture_default_str();
  c->add_option("--fraction", gr.fraction, "Stratified subsample fraction")->capture_default_str();
  c->add_option("--seed", gr.seed)->capture_default_str();
  c->add_option("--tol", gr.tol)->capture_default_str();
  c->add_option("--max-passes", gr.max_passes)->capture_default_str();
  c->add_option("--threads", gr.threads, "0 = all cores")->capture_default_str();
  c->callback([&] { action = [&] { return run_gridsearch(gr); }; });

  PredictOptions pr;
  c = app.add_subcommand("predict", "Decision values and labels (CSV)");
  c->add_option("-m,--model", pr.model)->required();
  c->add_option("-i,--features", pr.features)->required();
  c->add_option("-o,--out", pr.out, "'-' for stdout")->capture_default_str();
  c->callback([&] { action = [&] { return run_predict(pr); }; });

  EvaluateOptions ev;
  c = app.add_subcommand("evaluate", "Per-class recognition table and metrics JSON");
  c->add_option("-m,--model", ev.model);
  c->add_option("-i,--features", ev.features);
  c->add_option("-o,--out", ev.out, "Metrics JSON");
  c->add_option("--counts", ev.counts, "gamma_total,gamma_recognized,hadron_total,hadron_recognized");
  c->callback([&] { action = [&] { return run_evaluate(ev); }; });

  ExportOptions ex;
  c = app.add_subcommand("fxp-export", "Quantize model and basis into a trigger image");
  camera_flags(c, ex.camera);
  format_flags(c, ex.formats);
  c->add_option("-m,--model", ex.model)->required();
  c->add_option("-o,--out", ex.out, "Trigger image (binary)")->required();
  c->add_option("--report", ex.report, "Per-table quantization report (CSV)");
  c->callback([&] { action = [&] { return run_export(ex); }; });

  RunOptions run;
  c = app.add_subcommand("fxp-run", "Run the fixed-point trigger next to the float pipeline");
  camera_flags(c, run.camera);
  cleaning_flags(c, run.cleaning);
  c->add_option("-t,--trigger", run.trigger)->required();
  c->add_option("-m,--model", run.model)->required();
  c->add_option("-i,--events", run.events)->required();
  c->add_option("-o,--out", run.out, "Agreement CSV ('-' for stdout)")->capture_default_str();
  c->add_flag("--gate", run.gate, "Exit 4 unless the agreement thresholds hold");
  c->add_option("--min-agreement", run.min_agreement)->capture_default_str();
  c->add_option("--max-dev", run.max_dev)->capture_default_str();
  c->add_option("--dev-window", run.dev_window, "Deviation is checked where |float decision| <= this")
      ->capture_default_str();
  c->callback([&] { action = [&] { return run_fxp(run); }; });

  BenchOptions be;
  c = app.add_subcommand("bench", "Per-event latency of the float and fixed-point pipelines");
  camera_flags(c, be.camera);
  cleaning_flags(c, be.cleaning);
  c->add_option("-t,--trigger", be.trigger)->required();
  c->add_option("-m,--model", be.model)->required();
  c->add_option("-i,--events", be.events)->required();
  c->add_option("--repeat", be.repeat)->capture_default_str();
  c->callback([&] { action = [&] { return run_bench(be); }; });

  ReconstructOptions re;
  c = app.add_subcommand("reconstruct", "Rebuild one cleaned image from its moments (CSV)");
  camera_flags(c, re.camera);
  cleaning_flags(c, re.cleaning);
  c->add_option("-i,--events", re.events)->required();
  c->add_option("--event-id", re.event_id)->required();
  c->add_option("--n-max", re.n_max)->capture_default_str();
  c->add_option("-o,--out", re.out, "'-' for stdout")->capture_default_str();
  c->callback([&] { action = [&] { return run_reconstruct(re); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  if (dump_config) {
    std::cout << app.config_to_str(true, false);
    return kExitOk;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const pzt::io::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const pzt::fx::ExportRangeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
