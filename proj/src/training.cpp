#include "lmm/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "lmm/errors.hpp"
#include "lmm/lip.hpp"

namespace lmm {

namespace {

void check_shapes(const Grid& g, const Grid& g_hat) {
  if (!g.same_shape(g_hat)) throw config_error("loss: image shape mismatch");
  if (g.size() == 0) throw config_error("loss: empty image");
}

double clamp_below_m(double v, double m) { return std::min(v, m - 1e-9); }

}  // namespace

double mse(const Grid& g, const Grid& g_hat) {
  check_shapes(g, g_hat);
  double acc = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    const double d = g.data[i] - g_hat.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(g.size());
}

Grid mse_grad(const Grid& g, const Grid& g_hat) {
  check_shapes(g, g_hat);
  Grid out(g.width, g.height);
  const double scale = 2.0 / static_cast<double>(g.size());
  for (size_t i = 0; i < g.size(); ++i)
    out.data[i] = scale * (g_hat.data[i] - g.data[i]);
  return out;
}

double lipmse(const Grid& g, const Grid& g_hat, double m) {
  check_shapes(g, g_hat);
  double acc = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    const double r = std::log((m - clamp_below_m(g.data[i], m)) /
                              (m - clamp_below_m(g_hat.data[i], m)));
    if (!std::isfinite(r)) throw numeric_error("lipmse: non-finite log ratio");
    acc += r * r;
  }
  return m * m * acc / static_cast<double>(g.size());
}

Grid lipmse_grad(const Grid& g, const Grid& g_hat, double m) {
  check_shapes(g, g_hat);
  Grid out(g.width, g.height);
  const double scale = 2.0 * m * m / static_cast<double>(g.size());
  for (size_t i = 0; i < g.size(); ++i) {
    const double gh = clamp_below_m(g_hat.data[i], m);
    const double r = std::log((m - clamp_below_m(g.data[i], m)) / (m - gh));
    if (!std::isfinite(r)) throw numeric_error("lipmse_grad: non-finite log ratio");
    out.data[i] = scale * r / (m - gh);
  }
  return out;
}

double loss_value(Loss loss, const Grid& g, const Grid& g_hat, double m) {
  return loss == Loss::kMse ? mse(g, g_hat) : lipmse(g, g_hat, m);
}

Grid loss_grad(Loss loss, const Grid& g, const Grid& g_hat, double m) {
  return loss == Loss::kMse ? mse_grad(g, g_hat) : lipmse_grad(g, g_hat, m);
}

namespace {

// E_pr objective at shift t = xi(k), over the reference support.
double shift_objective(const std::vector<double>& ref_vals,
                       const std::vector<double>& xi_vals, double t, double m) {
  double acc = 0.0;
  for (size_t i = 0; i < ref_vals.size(); ++i) {
    const double d = ref_vals[i] - xi_inv(xi_vals[i] + t, m);
    acc += d * d;
  }
  return acc;
}

}  // namespace

ProbeErrorResult probe_error(const Grid& w_h, const Grid& w_m, const Grid& w_h_ref,
                             const std::vector<uint8_t>& mask_ref, double m) {
  if (!w_h.same_shape(w_h_ref) || !w_h.same_shape(w_m))
    throw config_error("probe_error: kernel shape mismatch");
  if (mask_ref.size() != w_h.size()) throw config_error("probe_error: mask shape mismatch");

  std::vector<double> ref_vals, xi_vals;
  double off_term = 0.0;
  for (size_t i = 0; i < w_h.size(); ++i) {
    if (mask_ref[i]) {
      ref_vals.push_back(w_h_ref.data[i]);
      xi_vals.push_back(xi(w_h.data[i], m));
    } else {
      off_term += w_h.data[i] * w_h.data[i];
    }
  }
  if (ref_vals.empty()) throw config_error("probe_error: empty reference support");

  // Coarse bracket of the inner minimization, then golden-section to 1e-10.
  const double t_max = xi(m - 1.0, m);
  const int scan = 2048;
  double best_t = 0.0, best_f = kInf;
  for (int i = 0; i <= scan; ++i) {
    const double t = -t_max + (2.0 * t_max) * i / scan;
    const double v = shift_objective(ref_vals, xi_vals, t, m);
    if (v < best_f) {
      best_f = v;
      best_t = t;
    }
  }
  const double step = 2.0 * t_max / scan;
  double a = best_t - step, b = best_t + step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = shift_objective(ref_vals, xi_vals, x1, m);
  double f2 = shift_objective(ref_vals, xi_vals, x2, m);
  while (b - a > 1e-10) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = shift_objective(ref_vals, xi_vals, x1, m);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = shift_objective(ref_vals, xi_vals, x2, m);
    }
  }
  const double t_star = (a + b) / 2.0;
  const double on_term = shift_objective(ref_vals, xi_vals, t_star, m);

  ProbeErrorResult out;
  out.best_shift_xi = t_star;
  out.e_pr = (on_term + off_term) / static_cast<double>(w_h.size());
  const Grid v = soft_mask(w_m);
  double mask_acc = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const double d = v.data[i] - (mask_ref[i] ? 1.0 : 0.0);
    mask_acc += d * d;
  }
  out.mask_mse = mask_acc / static_cast<double>(v.size());
  return out;
}

Adam::Adam(int width, int height, double beta1, double beta2, double eps)
    : h_{Grid(width, height, 0.0), Grid(width, height, 0.0)},
      mask_{Grid(width, height, 0.0), Grid(width, height, 0.0)},
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step_grid(Grid& w, const Grid& g, Moments& mo, double alpha) const {
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < w.size(); ++i) {
    mo.m1.data[i] = beta1_ * mo.m1.data[i] + (1.0 - beta1_) * g.data[i];
    mo.m2.data[i] = beta2_ * mo.m2.data[i] + (1.0 - beta2_) * g.data[i] * g.data[i];
    const double m_hat = mo.m1.data[i] / c1;
    const double v_hat = mo.m2.data[i] / c2;
    w.data[i] -= alpha * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

void Adam::step(KernelPair& kernels, const LayerGradients& grads, double alpha, double m) {
  ++t_;
  step_grid(kernels.w_h, grads.w_h, h_, alpha);
  step_grid(kernels.w_m, grads.w_m, mask_, alpha);
  for (double& v : kernels.w_h.data) v = std::min(v, m - 1e-6);
}

TrainRun train(AsplundLayer& layer, const std::vector<LipImage>& inputs,
               const std::vector<LipImage>& targets, const TrainConfig& config) {
  if (inputs.empty()) throw config_error("train: empty dataset");
  if (inputs.size() != targets.size())
    throw config_error("train: inputs/targets size mismatch");
  if (config.epochs < 1 || config.batch_size < 1 || config.learning_rate <= 0.0)
    throw config_error("train: invalid hyperparameters");

  const int kw = layer.kernels().width(), kh = layer.kernels().height();
  Adam adam(kw, kh, config.beta1, config.beta2, config.adam_eps);
  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainRun run;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_acc = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      LayerGradients acc(kw, kh);
      double batch_loss = 0.0;
      try {
        for (size_t i = start; i < end; ++i) {
          const LipImage& f = inputs[order[i]];
          const LipImage& g = targets[order[i]];
          const LipImage g_hat = layer.forward(f);
          batch_loss += loss_value(config.loss, g.grid, g_hat.grid, layer.m());
          acc.accumulate(layer.backward(
              loss_grad(config.loss, g.grid, g_hat.grid, layer.m())));
          run.tie_events += layer.tie_events();
          run.negative_u_pixels += layer.negative_u_pixels();
          run.clamped_inputs += layer.clamped_inputs();
        }
      } catch (const numeric_error& e) {
        throw numeric_error("train: " + std::string(e.what()) + " at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(batches) +
                            " (learning rate " + std::to_string(config.learning_rate) + ")");
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      acc.scale(scale);
      batch_loss *= scale;
      if (config.grad_clip > 0.0) {
        for (double& v : acc.w_h.data) v = std::clamp(v, -config.grad_clip, config.grad_clip);
        for (double& v : acc.w_m.data) v = std::clamp(v, -config.grad_clip, config.grad_clip);
      }
      if (!std::isfinite(batch_loss)) {
        throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batches) +
                            " (learning rate " + std::to_string(config.learning_rate) + ")");
      }
      if (config.optimizer == Optimizer::kAdam) {
        adam.step(layer.kernels(), acc, config.learning_rate, layer.m());
      } else {
        sgd_update(layer.kernels(), acc, config.learning_rate, layer.m());
      }
      run.log.push_back({epoch, batches, batch_loss});
      epoch_acc += batch_loss;
      ++batches;
    }
    run.epoch_loss.push_back(epoch_acc / batches);
  }
  return run;
}

namespace {

struct Stats {
  double avg = 0.0, stddev = 0.0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) s.avg += x;
  s.avg /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.avg) * (x - s.avg);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

}  // namespace

EvalReport evaluate(AsplundLayer& layer, const std::vector<LipImage>& test_images,
                    const std::vector<LipImage>& ground_truth, double shift) {
  if (test_images.empty()) throw config_error("evaluate: empty test set");
  if (test_images.size() != ground_truth.size())
    throw config_error("evaluate: images/ground-truth size mismatch");

  struct SetSpec {
    std::string name;
    double k;
  };
  const SetSpec sets[3] = {{"initial", 0.0}, {"dark", shift}, {"bright", -shift}};

  EvalReport report;
  for (const SetSpec& spec : sets) {
    std::vector<double> mses, lipmses;
    mses.reserve(test_images.size());
    lipmses.reserve(test_images.size());
    for (size_t i = 0; i < test_images.size(); ++i) {
      LipImage f = test_images[i];
      if (spec.k > 0.0) f = lip_add(f, spec.k);
      else if (spec.k < 0.0) f = lip_sub(f, -spec.k);
      const LipImage g_hat = layer.forward(f);
      mses.push_back(mse(ground_truth[i].grid, g_hat.grid));
      lipmses.push_back(lipmse(ground_truth[i].grid, g_hat.grid, layer.m()));
    }
    const Stats sm = stats_of(mses), sl = stats_of(lipmses);
    EvalSetRow row;
    row.set_name = spec.name;
    row.mse_avg = sm.avg;
    row.mse_std = sm.stddev;
    row.lipmse_avg = sl.avg;
    row.lipmse_std = sl.stddev;
    if (!report.rows.empty()) {
      row.mse_abs_diff = std::abs(sm.avg - report.rows.front().mse_avg);
      row.lipmse_abs_diff = std::abs(sl.avg - report.rows.front().lipmse_avg);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_train_log_csv(const std::filesystem::path& path, const TrainRun& run) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write training log: " + path.string());
  out << "epoch,batch,loss\n";
  out.precision(17);
  for (const BatchRecord& r : run.log)
    out << r.epoch << "," << r.batch << "," << r.loss << "\n";
}

void write_eval_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write evaluation report: " + path.string());
  out << "set,metric,average,stddev,abs_avg_diff\n";
  out.precision(17);
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const EvalSetRow& r = report.rows[i];
    out << r.set_name << ",MSE," << r.mse_avg << "," << r.mse_std << ",";
    if (i > 0) out << r.mse_abs_diff;
    out << "\n";
    out << r.set_name << ",LIPMSE," << r.lipmse_avg << "," << r.lipmse_std << ",";
    if (i > 0) out << r.lipmse_abs_diff;
    out << "\n";
  }
}

}  // namespace lmm
