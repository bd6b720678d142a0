#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lmm/image.hpp"
#include "lmm/layer.hpp"

namespace lmm {

enum class Loss { kMse, kLipMse };
enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  int epochs = 15;
  double learning_rate = 0.5;
  int batch_size = 20;
  Loss loss = Loss::kLipMse;
  Optimizer optimizer = Optimizer::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Elementwise cap on batch gradients, 0 disables. The null-initialised
  // soft masks put the first outputs near xi_inv(2*bottom/2), so the first
  // batches carry gradients several orders of magnitude above steady state;
  // uncapped they flood Adam's second-moment memory (~1/(1-beta2) steps)
  // and freeze short runs.
  double grad_clip = 1.0;
  uint64_t seed = 0;
};

// Mean squared pixel difference.
double mse(const Grid& g, const Grid& g_hat);
Grid mse_grad(const Grid& g, const Grid& g_hat);

// LIP-consistent squared error (m^2/P) sum ln((m-g)/(m-g_hat))^2. Pixels at
// or above m are clamped to m - 1e-9; a non-finite term raises numeric_error.
double lipmse(const Grid& g, const Grid& g_hat, double m = kDefaultM);
Grid lipmse_grad(const Grid& g, const Grid& g_hat, double m = kDefaultM);

double loss_value(Loss loss, const Grid& g, const Grid& g_hat, double m);
Grid loss_grad(Loss loss, const Grid& g, const Grid& g_hat, double m);

// Probe-recovery error between learned and reference height kernels,
// minimized over a LIP-shift k of the learned heights on the reference
// support (the map of distances cannot see such a shift). Also reports the
// MSE between the soft mask and the binary reference mask.
struct ProbeErrorResult {
  double e_pr = 0.0;
  double mask_mse = 0.0;
  double best_shift_xi = 0.0;  // argmin in t = xi(k)
};
ProbeErrorResult probe_error(const Grid& w_h, const Grid& w_m, const Grid& w_h_ref,
                             const std::vector<uint8_t>& mask_ref, double m = kDefaultM);

// Adam with bias correction; one state pair per kernel grid.
class Adam {
 public:
  Adam(int width, int height, double beta1, double beta2, double eps);
  void step(KernelPair& kernels, const LayerGradients& grads, double alpha, double m);

 private:
  struct Moments {
    Grid m1, m2;
  };
  void step_grid(Grid& w, const Grid& g, Moments& mo, double alpha) const;
  Moments h_, mask_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

struct BatchRecord {
  int epoch = 0;
  int batch = 0;
  double loss = 0.0;
};

struct TrainRun {
  std::vector<BatchRecord> log;
  std::vector<double> epoch_loss;  // batch-averaged per epoch
  long tie_events = 0;
  int negative_u_pixels = 0;
  int clamped_inputs = 0;
};

// Epochs x batches of forward/backward/update, batch gradient = mean over
// items, data order shuffled by a generator seeded from config.seed.
// A non-finite batch loss aborts with numeric_error naming the learning rate
// and batch index.
TrainRun train(AsplundLayer& layer, const std::vector<LipImage>& inputs,
               const std::vector<LipImage>& targets, const TrainConfig& config);

// Validation metrics on three test sets: the images, the images LIP-darkened
// by shift and LIP-brightened by shift, all scored against the ground truth
// of the original images.
struct EvalSetRow {
  std::string set_name;
  double mse_avg = 0.0;
  double mse_std = 0.0;
  double mse_abs_diff = 0.0;  // |avg - first set avg|, 0 for the first row
  double lipmse_avg = 0.0;
  double lipmse_std = 0.0;
  double lipmse_abs_diff = 0.0;
};
struct EvalReport {
  std::vector<EvalSetRow> rows;
};
EvalReport evaluate(AsplundLayer& layer, const std::vector<LipImage>& test_images,
                    const std::vector<LipImage>& ground_truth, double shift);

void write_train_log_csv(const std::filesystem::path& path, const TrainRun& run);
void write_eval_report_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace lmm
