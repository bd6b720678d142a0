// Acceptance suite: one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "lmm/asplund.hpp"
#include "lmm/dataset.hpp"
#include "lmm/layer.hpp"
#include "lmm/lip.hpp"
#include "lmm/morphology.hpp"
#include "lmm/training.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace lmm;

namespace {

struct Criterion {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    pass = false;
    if (detail.empty()) detail = why;
  }
};

double max_abs_diff(const Grid& a, const Grid& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a.data[i] == b.data[i]) continue;
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  }
  return worst;
}

// 1. Tri-form equivalence of the Asplund map against the bracketing oracle.
Criterion criterion_1() {
  Criterion c;
  testsup::Rng rng(1001);
  const int sizes[3] = {1, 3, 5};
  double worst = 0.0;
  for (int iter = 0; iter < 1000; ++iter) {
    const int w = rng.uniform_int(4, 16), h = rng.uniform_int(4, 16);
    const LipImage f = testsup::random_image(rng, w, h, 0.0, 254.0);
    const int pw = sizes[rng.uniform_int(0, 2)], ph = sizes[rng.uniform_int(0, 2)];
    const Probe b = testsup::random_probe(rng, pw, ph, 0.0, 250.0);

    const LipImage defn = oracle::asplund_map_defn(f, b, 1L << 8);
    const LipImage morph = asplund_map_morphological(f, b);
    const LipImage xi_form = asplund_map_xi_form(f, b);
    const LipImage gather = asplund_map_definitional(f, b);

    worst = std::max({worst, max_abs_diff(defn.grid, morph.grid),
                      max_abs_diff(defn.grid, xi_form.grid),
                      max_abs_diff(defn.grid, gather.grid)});
    if (worst > 1e-9) {
      c.fail("instance " + std::to_string(iter) + " disagrees by " + std::to_string(worst));
      break;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max pixel disagreement %.3e over 1000 instances", worst);
  c.detail = buf;
  return c;
}

// 2. Table 1 direction: cross-set metric differences vanish for the LIP map
//    and do not for a classical control.
Criterion criterion_2() {
  Criterion c;
  const ReferenceProbe ref = make_reference_probe(0.4, 50.0);
  const std::vector<LipImage> images = synthetic_images(200, 28, 28, 2002);
  const std::vector<LipImage> gt = build_ground_truth(images, ref);

  // a short training run stands in for the paper's learnt layer
  AsplundLayer layer(7, 7);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 7;
  (void)train(layer, images, gt, cfg);

  const EvalReport report = evaluate(layer, images, gt, 100.0);
  double worst = 0.0;
  for (size_t i = 1; i < report.rows.size(); ++i) {
    worst = std::max({worst, report.rows[i].mse_abs_diff, report.rows[i].lipmse_abs_diff});
  }
  if (worst > 1e-9) c.fail("cross-set metric difference " + std::to_string(worst));

  // classical double probing with the same heights: not invariant
  const Probe b = ref.as_probe();
  const auto classical_map = [&](const LipImage& f) {
    const Grid d = dilate(f.grid, reflect(b));
    const Grid e = erode(f.grid, b);
    Grid out(f.width(), f.height());
    for (size_t i = 0; i < out.size(); ++i) out.data[i] = d.data[i] - e.data[i];
    return out;
  };
  double base_avg = 0.0, dark_avg = 0.0;
  for (const LipImage& f : images) {
    const Grid g0 = classical_map(f);
    base_avg += mse(g0, g0);  // zero; the control scores against itself
    const LipImage dark = lip_add(f, 100.0);
    dark_avg += mse(g0, classical_map(dark));
  }
  base_avg /= double(images.size());
  dark_avg /= double(images.size());
  const double control_diff = std::abs(dark_avg - base_avg);
  if (control_diff <= 1e-3)
    c.fail("classical control unexpectedly invariant: " + std::to_string(control_diff));
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "LIP cross-set diff %.3e (<= 1e-9), classical control diff %.3e (> 1e-3)",
                worst, control_diff);
  c.detail = buf;
  return c;
}

// 3. Desk-scale probe recovery with the paper's hyperparameters.
Criterion criterion_3() {
  Criterion c;
  const std::vector<LipImage> images = synthetic_images(1000, 28, 28, 3003);
  const double betas[2] = {0.4, 1.0};
  const double cs[2] = {50.0, 150.0};
  char buf[256];
  std::string detail;
  long ties = 0;
  for (double beta : betas) {
    for (double cc : cs) {
      const ReferenceProbe ref = make_reference_probe(beta, cc);
      const std::vector<LipImage> gt = build_ground_truth(images, ref);
      AsplundLayer layer(7, 7);
      TrainConfig cfg;  // 15 epochs, Adam, alpha 0.5, batch 20
      cfg.seed = 42;
      const TrainRun run = train(layer, images, gt, cfg);
      ties += run.tie_events;
      const ProbeErrorResult r = probe_error(layer.kernels().w_h, layer.kernels().w_m,
                                             ref.w_h, ref.mask);
      std::snprintf(buf, sizeof buf, "[beta %.1f c %.0f: E_pr %.2e mask %.2e] ", beta, cc,
                    r.e_pr, r.mask_mse);
      detail += buf;
      if (r.e_pr > 5e-3) c.fail("E_pr above 5e-3 at beta " + std::to_string(beta));
      if (r.mask_mse > 5e-3) c.fail("mask MSE above 5e-3 at beta " + std::to_string(beta));
    }
  }
  std::snprintf(buf, sizeof buf, "routing ties during training: %ld", ties);
  c.detail = detail + buf;
  return c;
}

// 4. Analytic gradients against central finite differences, ties excluded.
Criterion criterion_4() {
  Criterion c;
  testsup::Rng rng(4004);
  int clean = 0, skipped = 0;
  double worst = 0.0;
  while (clean < 100 && clean + skipped < 400) {
    const KernelPair k = testsup::random_kernels(rng, 3, 3, 0.0, 180.0, -2.0, 2.0);
    const LipImage f = testsup::random_image(rng, 6, 6, 5.0, 250.0);
    Grid up(6, 6);
    for (double& v : up.data) v = rng.uniform(-1.0, 1.0);

    AsplundLayer layer(k);
    (void)layer.forward(f);
    if (layer.min_routing_gap() < 1e-2) {
      ++skipped;
      continue;
    }
    const LayerGradients analytic = layer.backward(up);
    const LayerGradients fd = oracle::fd_gradients(k, kDefaultM, f, up, 1e-5);
    for (size_t i = 0; i < analytic.w_h.size(); ++i) {
      const auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
      };
      worst = std::max({worst, rel(analytic.w_h.data[i], fd.w_h.data[i]),
                        rel(analytic.w_m.data[i], fd.w_m.data[i])});
    }
    if (worst > 1e-4) {
      c.fail("relative error " + std::to_string(worst));
      break;
    }
    ++clean;
  }
  if (clean < 100) c.fail("only " + std::to_string(clean) + " tie-free configurations");
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "%d configurations, worst rel. err %.2e, tie-affected skipped: %d", clean,
                worst, skipped);
  c.detail = buf;
  return c;
}

// 5. Morphology properties on 500 random instances.
Criterion criterion_5() {
  Criterion c;
  testsup::Rng rng(5005);
  int adjunction_checked = 0;
  for (int iter = 0; iter < 500; ++iter) {
    const LipImage f = testsup::random_image(rng, 6, 6, 0.0, 250.0);
    const LipImage g = testsup::random_image(rng, 6, 6, 0.0, 250.0);
    const Probe b = testsup::random_probe(rng, 3, 3, 0.0, 150.0);

    // route equivalence against the direct LIP-domain evaluation
    const LipImage ld = log_dilate(f, b);
    const LipImage le = log_erode(f, b);
    if (max_abs_diff(ld.grid, oracle::log_dilate_direct(f, b).grid) > 1e-9 ||
        max_abs_diff(le.grid, oracle::log_erode_direct(f, b).grid) > 1e-9) {
      c.fail("xi route deviates from the direct evaluation at instance " + std::to_string(iter));
      break;
    }
    for (double v : ld.grid.data) {
      if (v > f.m) {
        c.fail("log-dilation exceeded m");
        break;
      }
    }

    // adjunction, skipping boundary residuals
    const LipImage dg = log_dilate(g, b);
    double r1 = -kInf, r2 = -kInf;
    for (size_t i = 0; i < f.grid.size(); ++i) {
      r1 = std::max(r1, dg.grid.data[i] - f.grid.data[i]);
      r2 = std::max(r2, g.grid.data[i] - le.grid.data[i]);
    }
    if (std::abs(r1) >= 1e-9 && std::abs(r2) >= 1e-9) {
      ++adjunction_checked;
      if ((r1 <= 0.0) != (r2 <= 0.0)) {
        c.fail("adjunction broke at instance " + std::to_string(iter));
        break;
      }
    }

    // opening/closing idempotence
    const LipImage o1 = log_open(f, b);
    const LipImage c1 = log_close(f, b);
    if (max_abs_diff(o1.grid, log_open(o1, b).grid) > 1e-9 ||
        max_abs_diff(c1.grid, log_close(c1, b).grid) > 1e-9) {
      c.fail("idempotence broke at instance " + std::to_string(iter));
      break;
    }
  }
  c.detail = "500 instances, adjunction residuals checked on " +
             std::to_string(adjunction_checked);
  return c;
}

// 6. LIP algebra on 10000 random scalars.
Criterion criterion_6() {
  Criterion c;
  testsup::Rng rng(6006);
  const double m = kDefaultM;
  const auto ok = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
  };
  for (int iter = 0; iter < 10000; ++iter) {
    const double a = rng.uniform(0.0, m - 1.0);
    const double b = rng.uniform(0.0, m - 1.0);
    const double d = rng.uniform(0.0, m - 1.0);
    const double lambda = rng.uniform(-3.0, 3.0);
    const double mu = rng.uniform(-3.0, 3.0);
    const bool laws =
        ok(lip_add(a, b, m), lip_add(b, a, m)) &&
        ok(lip_add(lip_add(a, b, m), d, m), lip_add(a, lip_add(b, d, m), m)) &&
        ok(lip_add(a, 0.0, m), a) && ok(lip_add(a, lip_negate(a, m), m), 0.0) &&
        ok(lip_scalar_mul(lambda, lip_add(a, b, m), m),
           lip_add(lip_scalar_mul(lambda, a, m), lip_scalar_mul(lambda, b, m), m)) &&
        ok(lip_scalar_mul(lambda + mu, a, m),
           lip_add(lip_scalar_mul(lambda, a, m), lip_scalar_mul(mu, a, m), m));
    const bool homo =
        std::abs(xi(lip_add(a, b, m), m) - (xi(a, m) + xi(b, m))) <=
            1e-9 * (1.0 + std::abs(xi(a, m) + xi(b, m))) &&
        ok(xi(lip_sub(a, b, m), m), xi(a, m) - xi(b, m)) &&
        ok(xi(lip_negate(a, m), m), -xi(a, m));
    const bool roundtrip = std::abs(xi_inv(xi(a, m), m) - a) <= 1e-9;
    if (!laws || !homo || !roundtrip) {
      c.fail("scalar laws broke at iteration " + std::to_string(iter));
      break;
    }
  }
  c.detail = "vector-space laws, homomorphism and round-trips over 10000 scalars";
  return c;
}

// 7. E_pr shift invariance and agreement with the dense-grid minimizer.
Criterion criterion_7() {
  Criterion c;
  testsup::Rng rng(7007);
  const ReferenceProbe ref = make_reference_probe(0.8, 100.0);
  Grid w_m(ref.width, ref.height, 0.0);
  Grid cand = ref.w_h;
  for (size_t i = 0; i < cand.size(); ++i) {
    if (ref.mask[i]) cand.data[i] += rng.uniform(-4.0, 4.0);
  }
  const double base = probe_error(cand, w_m, ref.w_h, ref.mask).e_pr;
  double worst_shift = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double k = rng.uniform(-180.0, 180.0);
    Grid shifted = cand;
    for (size_t i = 0; i < shifted.size(); ++i) {
      if (ref.mask[i]) shifted.data[i] = lip_add(shifted.data[i], k);
    }
    const double moved = probe_error(shifted, w_m, ref.w_h, ref.mask).e_pr;
    worst_shift = std::max(worst_shift, std::abs(moved - base));
  }
  if (worst_shift > 1e-8) c.fail("shift variance " + std::to_string(worst_shift));

  double worst_oracle = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    Grid noisy = ref.w_h;
    for (size_t i = 0; i < noisy.size(); ++i) noisy.data[i] += rng.uniform(-3.0, 3.0);
    const double fast = probe_error(noisy, w_m, ref.w_h, ref.mask).e_pr;
    const double dense = oracle::probe_error_dense(noisy, ref.w_h, ref.mask, kDefaultM);
    worst_oracle = std::max(worst_oracle, std::abs(fast - dense));
  }
  if (worst_oracle > 1e-6) c.fail("minimizer deviates from the dense grid by " +
                                  std::to_string(worst_oracle));
  char buf[128];
  std::snprintf(buf, sizeof buf, "shift variance %.2e (<= 1e-8), oracle gap %.2e (<= 1e-6)",
                worst_shift, worst_oracle);
  c.detail = buf;
  return c;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Criterion (*run)();
  };
  const Entry entries[] = {
      {"tri-form Asplund map equivalence (1e-9, 1000 instances)", criterion_1},
      {"lighting invariance of validation metrics (1e-9) with non-LIP control", criterion_2},
      {"desk-scale probe recovery, E_pr and mask MSE <= 5e-3", criterion_3},
      {"gradient correctness vs finite differences (1e-4, >=100 configs)", criterion_4},
      {"morphology property suite (500 instances)", criterion_5},
      {"LIP algebra suite (10000 scalars)", criterion_6},
      {"E_pr shift invariance (1e-8) and dense-grid agreement (1e-6)", criterion_7},
  };
  int failures = 0;
  int index = 1;
  for (const Entry& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    const Criterion c = e.run();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  criterion %d: %s [%s] (%.1fs)\n", c.pass ? "PASS" : "FAIL", index,
                e.name, c.detail.c_str(), secs);
    std::fflush(stdout);
    failures += c.pass ? 0 : 1;
    ++index;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  else std::printf("all 7 criteria passed\n");
  return failures == 0 ? 0 : 1;
}
