#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "lmm/dataset.hpp"
#include "lmm/layer.hpp"
#include "lmm/manifest.hpp"
#include "lmm/pgm.hpp"
#include "lmm/training.hpp"
#include "test_support.hpp"

using namespace lmm;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LMM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

size_t count_files(const std::filesystem::path& dir) {
  size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    (void)entry;
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("gen-probes emits the paper grid deterministically") {
  const auto dir = testsup::scratch_dir("cli_probes");
  const std::string out1 = (dir / "a").string();
  REQUIRE(run_cli("gen-probes --out " + out1) == 0);
  CHECK(count_files(out1) == 102);

  const std::string out2 = (dir / "b").string();
  REQUIRE(run_cli("gen-probes --out " + out2) == 0);
  for (const auto& entry : std::filesystem::directory_iterator(out1)) {
    const auto twin = std::filesystem::path(out2) / entry.path().filename();
    CHECK(read_bytes(entry.path()) == read_bytes(twin));
  }

  const std::string single = (dir / "one").string();
  REQUIRE(run_cli("gen-probes --beta-list 0.4 --c-list 50 --previews --out " + single) == 0);
  size_t probes = 0;
  for (const auto& entry : std::filesystem::directory_iterator(single))
    probes += entry.path().extension() == ".txt";
  CHECK(probes == 1);
  CHECK(count_files(single) == 5);  // probe + 2 previews x (pgm + f64)
}

TEST_CASE("ground-truth, train, eval, probe-error pipeline") {
  const auto dir = testsup::scratch_dir("cli_pipeline");
  const std::string probe = (dir / "probe.txt").string();
  save_reference_probe(probe, make_reference_probe(0.4, 50.0));

  const std::string gt = (dir / "gt.bin").string();
  REQUIRE(run_cli("ground-truth --synthetic 30 --data-seed 9 --probe " + probe + " --out " + gt) == 0);
  GroundTruthHeader header;
  (void)load_ground_truth(gt, &header);
  CHECK(header.count == 30);
  CHECK(header.beta == 0.4);

  const std::string ckpt = (dir / "k.txt").string();
  const std::string log = (dir / "log.csv").string();
  REQUIRE(run_cli("train --synthetic 30 --data-seed 9 --gt " + gt + " --epochs 1 --seed 3 " +
                  "--checkpoint-out " + ckpt + " --log-out " + log) == 0);
  CHECK(std::filesystem::exists(ckpt));
  CHECK(std::filesystem::exists(log));
  const Manifest man = load_manifest(ckpt + ".manifest");
  CHECK(man.get("command") == "train");
  CHECK(man.get("seed") == "3");
  CHECK(std::stod(man.get("probe_beta")) == 0.4);
  CHECK_FALSE(man.get("data_hash").empty());

  const std::string report = (dir / "report.csv").string();
  REQUIRE(run_cli("eval --synthetic 30 --data-seed 9 --gt " + gt + " --checkpoint " + ckpt +
                  " --shift 100 --report-out " + report) == 0);
  CHECK(std::filesystem::exists(report));

  // shift 0 degenerates to three identical rows
  const std::string report0 = (dir / "report0.csv").string();
  REQUIRE(run_cli("eval --synthetic 30 --data-seed 9 --gt " + gt + " --checkpoint " + ckpt +
                  " --shift 0 --report-out " + report0) == 0);
  std::ifstream rin(report0);
  std::string line, first_avg;
  std::getline(rin, line);  // header
  std::vector<std::string> rows;
  while (std::getline(rin, line)) rows.push_back(line);
  REQUIRE(rows.size() == 6);
  const auto avg_of = [](const std::string& row) {
    const size_t a = row.find(',', row.find(',') + 1);
    return row.substr(a + 1, row.find(',', a + 1) - a - 1);
  };
  CHECK(avg_of(rows[0]) == avg_of(rows[2]));
  CHECK(avg_of(rows[0]) == avg_of(rows[4]));

  // probe-error of a checkpoint that stores the reference exactly
  const ReferenceProbe ref = make_reference_probe(0.4, 50.0);
  KernelPair k(7, 7);
  k.w_h = ref.w_h;
  for (size_t i = 0; i < ref.mask.size(); ++i) k.w_m.data[i] = ref.mask[i] ? 30.0 : -30.0;
  const std::string perfect = (dir / "perfect.txt").string();
  AsplundLayer(k).save(perfect);
  const std::string pe_out = (dir / "pe.csv").string();
  REQUIRE(run_cli("probe-error --checkpoint " + perfect + " --reference " + probe + " --out " +
                  pe_out) == 0);
  std::ifstream pe(pe_out);
  std::getline(pe, line);
  std::getline(pe, line);
  const double e_pr = std::stod(line.substr(line.rfind(',') + 1));
  CHECK(e_pr <= 1e-10);
}

TEST_CASE("predict dumps the seven panels") {
  const auto dir = testsup::scratch_dir("cli_predict");
  const std::string probe = (dir / "probe.txt").string();
  const ReferenceProbe ref = make_reference_probe(0.6, 80.0);
  save_reference_probe(probe, ref);

  KernelPair k(7, 7);
  k.w_h = ref.w_h;
  for (size_t i = 0; i < ref.mask.size(); ++i) k.w_m.data[i] = ref.mask[i] ? 30.0 : -30.0;
  const std::string ckpt = (dir / "k.txt").string();
  AsplundLayer(k).save(ckpt);

  const std::vector<LipImage> images = synthetic_images(3, 28, 28, 17);
  write_idx_images(dir / "imgs.idx", images);

  const std::string prefix = (dir / "out" / "panel").string();
  REQUIRE(run_cli("predict --image " + (dir / "imgs.idx").string() + " --index 1 --checkpoint " +
                  ckpt + " --reference " + probe + " --out " + prefix) == 0);
  for (const char* panel : {"_input", "_dark", "_bright", "_gt", "_pred", "_pred_dark",
                            "_pred_bright"}) {
    CHECK(std::filesystem::exists(prefix + panel + ".pgm"));
    CHECK(std::filesystem::exists(prefix + panel + ".f64"));
  }
  // stored numerics are not display-scaled: predictions match a fresh
  // forward over the same file (whose pixels were quantised to bytes)
  AsplundLayer layer(k);
  const LipImage expect = layer.forward(load_idx_images(dir / "imgs.idx")[1]);
  const Grid stored = read_f64(prefix + std::string("_pred.f64"));
  for (size_t i = 0; i < stored.size(); ++i)
    CHECK(stored.data[i] == expect.grid.data[i]);

  // a PGM input works too
  write_pgm(dir / "single.pgm", images[0].grid);
  REQUIRE(run_cli("predict --image " + (dir / "single.pgm").string() + " --checkpoint " + ckpt +
                  " --out " + (dir / "out2" / "p").string()) == 0);
  CHECK(std::filesystem::exists((dir / "out2" / "p_pred.pgm")));
}

TEST_CASE("config file values are used, flags win over them") {
  const auto dir = testsup::scratch_dir("cli_config");
  const std::string probe = (dir / "probe.txt").string();
  save_reference_probe(probe, make_reference_probe(0.4, 50.0));
  std::ofstream cfg(dir / "run.cfg");
  cfg << "synthetic=12\ndata-seed=9\nepochs=1\nseed=5\n";
  cfg.close();

  const std::string ckpt = (dir / "k.txt").string();
  REQUIRE(run_cli("train --config " + (dir / "run.cfg").string() + " --probe " + probe +
                  " --seed 6 --checkpoint-out " + ckpt) == 0);
  const Manifest man = load_manifest(ckpt + ".manifest");
  CHECK(man.get("data_count") == "12");  // from the config file
  CHECK(man.get("epochs") == "1");
  CHECK(man.get("seed") == "6");  // the flag takes precedence
}

TEST_CASE("exit codes") {
  const auto dir = testsup::scratch_dir("cli_errors");
  CHECK(run_cli("no-such-command") == 2);
  CHECK(run_cli("train --epochs 2") == 2);  // missing required flags
  CHECK(run_cli("probe-error --checkpoint " + (dir / "nope.txt").string() + " --reference " +
                (dir / "nope2.txt").string()) == 3);
  const std::string gt = (dir / "gt.bin").string();
  std::ofstream(gt) << "garbage";
  const std::string ckpt = (dir / "k.txt").string();
  AsplundLayer(7, 7).save(ckpt);
  CHECK(run_cli("eval --synthetic 5 --gt " + gt + " --checkpoint " + ckpt +
                " --report-out " + (dir / "r.csv").string()) == 3);
  CHECK(run_cli("--help") == 0);
}
