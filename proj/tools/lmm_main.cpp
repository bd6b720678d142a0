// Command-line front end: probe generation, ground-truth production,
// training, evaluation, prediction dumps and probe-recovery errors.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmm/asplund.hpp"
#include "lmm/dataset.hpp"
#include "lmm/errors.hpp"
#include "lmm/layer.hpp"
#include "lmm/lip.hpp"
#include "lmm/manifest.hpp"
#include "lmm/pgm.hpp"
#include "lmm/training.hpp"

namespace fs = std::filesystem;
using namespace lmm;

namespace {

struct DataOptions {
  std::string data_path;
  int synthetic = 0;
  uint64_t data_seed = 1;
  int limit = 0;
};

void add_data_options(CLI::App* cmd, DataOptions& opt) {
  auto* data = cmd->add_option("--data", opt.data_path, "IDX image file (plain or .gz)");
  auto* synth = cmd->add_option("--synthetic", opt.synthetic,
                                "Generate this many seeded synthetic images instead");
  cmd->add_option("--data-seed", opt.data_seed, "Seed for --synthetic");
  cmd->add_option("--limit", opt.limit, "Use only the first N images");
  data->excludes(synth);
}

std::vector<LipImage> load_data(const DataOptions& opt) {
  std::vector<LipImage> images;
  if (opt.synthetic > 0) {
    images = synthetic_images(opt.synthetic, 28, 28, opt.data_seed);
  } else if (!opt.data_path.empty()) {
    images = load_idx_images(opt.data_path);
  } else {
    throw config_error("either --data or --synthetic is required");
  }
  if (opt.limit > 0 && static_cast<size_t>(opt.limit) < images.size())
    images.resize(opt.limit);
  return images;
}

std::string probe_file_name(double beta, double c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "probe_b%.3g_c%.6g.txt", beta, c);
  return buf;
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos < csv.size()) {
    size_t next = csv.find(',', pos);
    if (next == std::string::npos) next = csv.size();
    out.push_back(std::stod(csv.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

int cmd_gen_probes(const std::string& out_dir, const std::string& beta_csv,
                   const std::string& c_csv, int window, double m, bool previews) {
  const std::vector<double> betas = beta_csv.empty() ? default_beta_grid() : parse_list(beta_csv);
  const std::vector<double> cs = c_csv.empty() ? default_c_grid() : parse_list(c_csv);
  fs::create_directories(out_dir);
  int count = 0;
  for (double beta : betas) {
    for (double c : cs) {
      const ReferenceProbe p = make_reference_probe(beta, c, m, window);
      const fs::path path = fs::path(out_dir) / probe_file_name(beta, c);
      save_reference_probe(path, p);
      if (previews) {
        fs::path base = path;
        base.replace_extension();
        dump_panel(base.string() + "_heights", p.w_h, m, true);
        Grid mask_grid(p.width, p.height);
        for (size_t i = 0; i < mask_grid.size(); ++i)
          mask_grid.data[i] = p.mask[i] ? 255.0 : 0.0;
        dump_panel(base.string() + "_mask", mask_grid, m, false);
      }
      ++count;
    }
  }
  std::cout << "wrote " << count << " probe files to " << out_dir << "\n";
  return 0;
}

int cmd_ground_truth(const DataOptions& data_opt, const std::string& probe_file,
                     const std::string& out_file) {
  const std::vector<LipImage> images = load_data(data_opt);
  const ReferenceProbe probe = load_reference_probe(probe_file);
  const std::vector<LipImage> maps = build_ground_truth(images, probe);
  save_ground_truth(out_file, probe, dataset_hash(images), maps);
  std::cout << "wrote " << maps.size() << " ground-truth maps to " << out_file << "\n";
  return 0;
}

TrainConfig make_train_config(int epochs, double lr, int batch, const std::string& loss,
                              const std::string& optimizer, uint64_t seed, double grad_clip) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.batch_size = batch;
  cfg.seed = seed;
  cfg.grad_clip = grad_clip;
  if (loss == "mse") cfg.loss = Loss::kMse;
  else if (loss == "lipmse") cfg.loss = Loss::kLipMse;
  else throw config_error("unknown loss: " + loss);
  if (optimizer == "adam") cfg.optimizer = Optimizer::kAdam;
  else if (optimizer == "sgd") cfg.optimizer = Optimizer::kSgd;
  else throw config_error("unknown optimizer: " + optimizer);
  return cfg;
}

int cmd_train(const DataOptions& data_opt, const std::string& gt_file,
              const std::string& probe_file, int window, const TrainConfig& cfg,
              const std::string& checkpoint_out, const std::string& log_out,
              const std::string& manifest_out) {
  Manifest man;
  man.set("command", std::string("train"));
  man.set("timestamp_start", iso_timestamp());
  man.set("git_describe", git_describe());

  const std::vector<LipImage> images = load_data(data_opt);
  const uint64_t hash = dataset_hash(images);

  std::vector<LipImage> targets;
  if (!gt_file.empty()) {
    GroundTruthHeader header;
    targets = load_ground_truth(gt_file, &header);
    if (header.data_hash != hash)
      throw data_error("ground-truth cache was built for a different dataset");
    if (targets.size() != images.size())
      throw data_error("ground-truth count does not match the dataset");
    man.set("probe_beta", header.beta);
    man.set("probe_c", header.c);
  } else if (!probe_file.empty()) {
    const ReferenceProbe probe = load_reference_probe(probe_file);
    targets = build_ground_truth(images, probe);
    man.set("probe_beta", probe.beta);
    man.set("probe_c", probe.c);
  } else {
    throw config_error("either --gt or --probe is required");
  }

  AsplundLayer layer(window, window);
  const TrainRun run = train(layer, images, targets, cfg);
  layer.save(checkpoint_out);
  if (!log_out.empty()) write_train_log_csv(log_out, run);

  man.set("seed", static_cast<long long>(cfg.seed));
  man.set("epochs", static_cast<long long>(cfg.epochs));
  man.set("learning_rate", cfg.learning_rate);
  man.set("batch_size", static_cast<long long>(cfg.batch_size));
  man.set("loss", cfg.loss == Loss::kMse ? "mse" : "lipmse");
  man.set("optimizer", cfg.optimizer == Optimizer::kAdam ? "adam" : "sgd");
  man.set("grad_clip", cfg.grad_clip);
  man.set("window", static_cast<long long>(window));
  man.set("data", data_opt.synthetic > 0
                      ? "synthetic:" + std::to_string(data_opt.synthetic) + ":seed:" +
                            std::to_string(data_opt.data_seed)
                      : data_opt.data_path);
  man.set("data_count", static_cast<long long>(images.size()));
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx", static_cast<unsigned long long>(hash));
  man.set("data_hash", std::string(hash_buf));
  man.set("checkpoint", checkpoint_out);
  man.set("final_epoch_loss", run.epoch_loss.back());
  man.set("tie_events", static_cast<long long>(run.tie_events));
  man.set("negative_u_pixels", static_cast<long long>(run.negative_u_pixels));
  man.set("clamped_inputs", static_cast<long long>(run.clamped_inputs));
  man.set("timestamp_end", iso_timestamp());
  const std::string man_path = manifest_out.empty() ? checkpoint_out + ".manifest" : manifest_out;
  save_manifest(man_path, man);

  std::cout << "final epoch loss " << run.epoch_loss.back() << ", checkpoint " << checkpoint_out
            << "\n";
  return 0;
}

int cmd_eval(const DataOptions& data_opt, const std::string& gt_file,
             const std::string& checkpoint, double shift, const std::string& report_out) {
  const std::vector<LipImage> images = load_data(data_opt);
  GroundTruthHeader header;
  std::vector<LipImage> gt = load_ground_truth(gt_file, &header);
  if (header.data_hash != dataset_hash(images))
    throw data_error("ground-truth cache was built for a different dataset");
  AsplundLayer layer = AsplundLayer::load(checkpoint);
  const EvalReport report = evaluate(layer, images, gt, shift);
  write_eval_report_csv(report_out, report);
  for (const EvalSetRow& r : report.rows) {
    std::printf("%-8s MSE avg %.6e std %.6e diff %.3e | LIPMSE avg %.6e std %.6e diff %.3e\n",
                r.set_name.c_str(), r.mse_avg, r.mse_std, r.mse_abs_diff, r.lipmse_avg,
                r.lipmse_std, r.lipmse_abs_diff);
  }
  return 0;
}

LipImage load_single_image(const std::string& path, int index) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".pgm") return LipImage(read_pgm(path), kDefaultM);
  std::vector<LipImage> images = load_idx_images(path);
  if (index < 0 || static_cast<size_t>(index) >= images.size())
    throw data_error("--index out of range: dataset has " + std::to_string(images.size()) +
                     " images");
  return images[index];
}

int cmd_predict(const std::string& image_path, int index, const std::string& checkpoint,
                const std::string& reference, double shift, const std::string& out_prefix) {
  const LipImage f = load_single_image(image_path, index);
  AsplundLayer layer = AsplundLayer::load(checkpoint);
  const LipImage dark = lip_add(f, shift);
  const LipImage bright = lip_sub(f, shift);

  if (const fs::path parent = fs::path(out_prefix).parent_path(); !parent.empty())
    fs::create_directories(parent);
  // Inputs are dumped as-is; distance maps in the paper-style inverted display.
  dump_panel(out_prefix + "_input", f.grid, f.m, false);
  dump_panel(out_prefix + "_dark", dark.grid, f.m, false);
  dump_panel(out_prefix + "_bright", bright.grid, f.m, false);
  if (!reference.empty()) {
    const ReferenceProbe probe = load_reference_probe(reference);
    const LipImage gt = asplund_map_morphological(f, probe.as_probe());
    dump_panel(out_prefix + "_gt", gt.grid, f.m, true);
  }
  dump_panel(out_prefix + "_pred", layer.forward(f).grid, f.m, true);
  dump_panel(out_prefix + "_pred_dark", layer.forward(dark).grid, f.m, true);
  dump_panel(out_prefix + "_pred_bright", layer.forward(bright).grid, f.m, true);
  std::cout << "wrote panels with prefix " << out_prefix << "\n";
  return 0;
}

int cmd_probe_error(const std::string& checkpoint, const std::string& reference,
                    const std::string& out_file) {
  const AsplundLayer layer = AsplundLayer::load(checkpoint);
  const ReferenceProbe probe = load_reference_probe(reference);
  if (layer.kernels().width() != probe.width || layer.kernels().height() != probe.height)
    throw config_error("checkpoint and reference windows differ");
  const ProbeErrorResult r = probe_error(layer.kernels().w_h, layer.kernels().w_m, probe.w_h,
                                         probe.mask, layer.m());
  std::printf("E_pr %.6e  mask MSE %.6e  (best shift xi(k) = %.6g)\n", r.e_pr, r.mask_mse,
              r.best_shift_xi);
  if (!out_file.empty()) {
    std::ofstream out(out_file);
    if (!out) throw data_error("cannot write report: " + out_file);
    out.precision(17);
    out << "kernel,metric,value\n";
    out << "w_h,e_pr," << r.e_pr << "\n";
    out << "w_m,mse," << r.mask_mse << "\n";
    out << "w_h,best_shift_xi," << r.best_shift_xi << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logarithmic mathematical morphology and trainable Asplund-distance maps"};
  app.require_subcommand(1);

  // gen-probes
  auto* gen = app.add_subcommand("gen-probes", "Generate reference structuring functions");
  std::string gen_out, gen_betas, gen_cs;
  int gen_window = 7;
  double gen_m = kDefaultM;
  bool gen_previews = false;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--beta-list", gen_betas, "Comma-separated betas (default paper grid)");
  gen->add_option("--c-list", gen_cs, "Comma-separated c values (default paper grid)");
  gen->add_option("--window", gen_window, "Probe window size");
  gen->add_option("--m", gen_m, "LIP ceiling");
  gen->add_flag("--previews", gen_previews, "Also dump PGM previews of heights and mask");

  // ground-truth
  auto* gt = app.add_subcommand("ground-truth", "Compute Asplund distance maps for a probe");
  DataOptions gt_data;
  std::string gt_probe, gt_out;
  add_data_options(gt, gt_data);
  gt->add_option("--probe", gt_probe, "Reference probe file")->required();
  gt->add_option("--out", gt_out, "Output ground-truth cache file")->required();

  // train
  auto* tr = app.add_subcommand("train", "Learn the probe from (image, map) pairs");
  DataOptions tr_data;
  std::string tr_gt, tr_probe, tr_loss = "lipmse", tr_opt = "adam";
  std::string tr_ckpt, tr_log, tr_manifest;
  int tr_epochs = 15, tr_batch = 20, tr_window = 7;
  double tr_lr = 0.5, tr_clip = 1.0;
  uint64_t tr_seed = 0;
  add_data_options(tr, tr_data);
  tr->add_option("--gt", tr_gt, "Ground-truth cache file");
  tr->add_option("--probe", tr_probe, "Reference probe file (compute ground truth on the fly)");
  tr->add_option("--epochs", tr_epochs, "Training epochs");
  tr->add_option("--lr", tr_lr, "Learning rate");
  tr->add_option("--batch", tr_batch, "Batch size");
  tr->add_option("--loss", tr_loss, "mse | lipmse");
  tr->add_option("--optimizer", tr_opt, "adam | sgd");
  tr->add_option("--grad-clip", tr_clip, "Elementwise gradient cap, 0 disables");
  tr->add_option("--seed", tr_seed, "Shuffling seed");
  tr->add_option("--window", tr_window, "Kernel window size");
  tr->add_option("--checkpoint-out", tr_ckpt, "Checkpoint output path")->required();
  tr->add_option("--log-out", tr_log, "Per-batch loss CSV");
  tr->add_option("--manifest-out", tr_manifest, "Manifest path (default checkpoint + .manifest)");

  // eval
  auto* ev = app.add_subcommand("eval", "Validation metrics on initial/dark/bright test sets");
  DataOptions ev_data;
  std::string ev_gt, ev_ckpt, ev_report;
  double ev_shift = 100.0;
  add_data_options(ev, ev_data);
  ev->add_option("--gt", ev_gt, "Ground-truth cache file")->required();
  ev->add_option("--checkpoint", ev_ckpt, "Kernel checkpoint")->required();
  ev->add_option("--shift", ev_shift, "LIP shift used for the dark/bright sets");
  ev->add_option("--report-out", ev_report, "Report CSV path")->required();

  // predict
  auto* pr = app.add_subcommand("predict", "Dump prediction panels for one image");
  std::string pr_image, pr_ckpt, pr_reference, pr_out;
  int pr_index = 0;
  double pr_shift = 100.0;
  pr->add_option("--image", pr_image, "Input image (.pgm, or IDX file with --index)")->required();
  pr->add_option("--index", pr_index, "Image index inside an IDX file");
  pr->add_option("--checkpoint", pr_ckpt, "Kernel checkpoint")->required();
  pr->add_option("--reference", pr_reference, "Reference probe (adds the ground-truth panel)");
  pr->add_option("--shift", pr_shift, "LIP shift for the dark/bright panels");
  pr->add_option("--out", pr_out, "Output path prefix")->required();

  // probe-error
  auto* pe = app.add_subcommand("probe-error", "Probe-recovery error of a checkpoint");
  std::string pe_ckpt, pe_reference, pe_out;
  pe->add_option("--checkpoint", pe_ckpt, "Kernel checkpoint")->required();
  pe->add_option("--reference", pe_reference, "Reference probe file")->required();
  pe->add_option("--out", pe_out, "Report CSV path");

  // flat key=value config per subcommand; explicit flags take precedence
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->set_config("--config", "", "Flat key=value config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed())
      return cmd_gen_probes(gen_out, gen_betas, gen_cs, gen_window, gen_m, gen_previews);
    if (gt->parsed()) return cmd_ground_truth(gt_data, gt_probe, gt_out);
    if (tr->parsed()) {
      const TrainConfig cfg =
          make_train_config(tr_epochs, tr_lr, tr_batch, tr_loss, tr_opt, tr_seed, tr_clip);
      return cmd_train(tr_data, tr_gt, tr_probe, tr_window, cfg, tr_ckpt, tr_log, tr_manifest);
    }
    if (ev->parsed()) return cmd_eval(ev_data, ev_gt, ev_ckpt, ev_shift, ev_report);
    if (pr->parsed())
      return cmd_predict(pr_image, pr_index, pr_ckpt, pr_reference, pr_shift, pr_out);
    if (pe->parsed()) return cmd_probe_error(pe_ckpt, pe_reference, pe_out);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
