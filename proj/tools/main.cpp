// Command-line harness: five experiment subcommands emitting CSV (and, for
// tracking, PGM) artifacts into an output directory.

#include "CLI11.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "speclabel/experiments.hpp"

namespace fs = std::filesystem;
using namespace speclabel;

namespace {

struct CommonOpts {
  std::uint64_t seed = 0;
  double gamma = -1.0;  // < 0: rule of thumb 20/n
  double q = 2.0;
  double a = 0.0, b = 0.0;
  std::int64_t iters = 6000;
  std::int64_t burnin = 1200;
  int thin = 4;
  int basis = 0;
  std::string out = "out";
  std::string config;
};

// Fills options of `cmd` from a flat "key = value" file (# starts a comment).
// Each key names a long option of the subcommand without the leading dashes.
// Options already given on the command line keep their command-line value.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  const auto trim = [](const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  std::vector<CLI::Option*> filled;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto where = path + ":" + std::to_string(lineno);
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value at " + where);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config: missing key at " + where);
    if (key == "config")
      throw std::runtime_error("config: files cannot chain further config files (" + where + ")");
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw std::runtime_error("config: unknown key '" + key + "' for " + cmd->get_name());
    const bool touched = std::find(filled.begin(), filled.end(), opt) != filled.end();
    if (!touched && opt->count() > 0) continue;  // command line wins
    if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                              (value.front() == '\'' && value.back() == '\''))) {
      opt->add_result(value.substr(1, value.size() - 2));
    } else if (value.empty()) {
      throw std::runtime_error("config: empty value for key '" + key + "' at " + where);
    } else {
      // unquoted values are whitespace-split so list options read naturally
      std::istringstream pieces(value);
      std::string piece;
      while (pieces >> piece) opt->add_result(piece);
    }
    if (!touched) filled.push_back(opt);
  }
  for (CLI::Option* opt : filled) opt->run_callback();
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config,
                  "Read options from a key = value file (# comments); flags given"
                  " on the command line win");
  cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--gamma", o.gamma,
                  "Truncation-level prior rate (negative = 20/n rule of thumb)")
      ->capture_default_str();
  cmd->add_option("--q", o.q, "Laplacian power in the series prior")->capture_default_str();
  cmd->add_option("--a", o.a, "Scale prior shape (a = b = 0 is the improper default)")
      ->capture_default_str();
  cmd->add_option("--b", o.b, "Scale prior rate")->capture_default_str();
  cmd->add_option("--iters", o.iters, "MCMC sweeps")->capture_default_str();
  cmd->add_option("--burnin", o.burnin, "Discarded initial sweeps")->capture_default_str();
  cmd->add_option("--thin", o.thin, "Keep every thin-th post-burn-in sample")
      ->capture_default_str();
  cmd->add_option("--basis", o.basis, "Eigenpair budget (0 = automatic)")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
}

Hyperparams make_hyper(const CommonOpts& o) {
  Hyperparams hyper;
  hyper.laplacian_power = o.q;
  hyper.scale_shape = o.a;
  hyper.scale_rate = o.b;
  return hyper;
}

McmcSettings make_mcmc(const CommonOpts& o) {
  McmcSettings mcmc;
  mcmc.iterations = o.iters;
  mcmc.burnin = o.burnin;
  mcmc.thinning = o.thin;
  return mcmc;
}

template <typename Fn>
void write_text_file(const fs::path& path, Fn&& fill) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  fill(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

void write_chain_artifacts(const fs::path& dir, const Trace& trace,
                           const PosteriorSummary& summary, const StageTimes& times) {
  write_text_file(dir / "trace.csv", [&](std::ostream& o) { write_trace_csv(trace, o); });
  write_text_file(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(summary, o); });
  write_text_file(dir / "khist.csv",
                  [&](std::ostream& o) { write_level_histogram_csv(summary, o); });
  write_text_file(dir / "timing.csv", [&](std::ostream& o) { write_timing_csv(times, o); });
}

void report_demo(const char* name, const DemoResult& result, const fs::path& dir) {
  std::cout << name << ": n=" << result.graph.num_vertices()
            << " hidden=" << result.hidden.size()
            << " heldout_accuracy=" << result.heldout_accuracy
            << " mean_k=" << result.posterior_mean_level
            << " accept=" << result.summary.acceptance_rate << '\n'
            << "artifacts in " << dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian binary node classification on graphs with a randomly"
               " truncated Laplacian eigenbasis prior"};
  app.require_subcommand(1);

  // --- path-demo ---------------------------------------------------------
  auto* path_cmd = app.add_subcommand(
      "path-demo", "Smooth synthetic field on a path graph, labels partly hidden");
  CommonOpts path_opts;
  int path_n = 500;
  double path_observe = 0.8;
  std::string path_export;
  add_common(path_cmd, path_opts);
  path_cmd->add_option("--n", path_n, "Path length")->capture_default_str();
  path_cmd->add_option("--observe-frac", path_observe, "Fraction of labels kept observed")
      ->capture_default_str();
  path_cmd->add_option("--export-graph", path_export, "Also write the graph as an edge list");
  path_cmd->callback([&] {
    apply_config_file(path_cmd, path_opts.config);
    DemoConfig config;
    config.n = path_n;
    config.observe_frac = path_observe;
    config.gamma = path_opts.gamma;
    config.hyper = make_hyper(path_opts);
    config.mcmc = make_mcmc(path_opts);
    config.seed = path_opts.seed;
    config.basis_budget = path_opts.basis;
    DemoResult result = run_path_demo(config);
    const fs::path dir = prepare_out_dir(path_opts.out);
    write_chain_artifacts(dir, result.trace, result.summary, result.times);
    if (!path_export.empty()) write_edge_list_file(result.graph, path_export);
    report_demo("path-demo", result, dir);
  });

  // --- ws-demo ------------------------------------------------------------
  auto* ws_cmd = app.add_subcommand(
      "ws-demo", "Same synthetic setup on a small-world graph (or an imported edge list)");
  CommonOpts ws_opts;
  int ws_n = 1000;
  double ws_rewire = 0.25, ws_observe = 0.8;
  std::string ws_graph, ws_export;
  add_common(ws_cmd, ws_opts);
  ws_cmd->add_option("--n", ws_n, "Ring size before rewiring")->capture_default_str();
  ws_cmd->add_option("--rewire", ws_rewire, "Edge rewiring probability")->capture_default_str();
  ws_cmd->add_option("--observe-frac", ws_observe, "Fraction of labels kept observed")
      ->capture_default_str();
  ws_cmd->add_option("--graph", ws_graph,
                     "Import this edge list (1-based \"u v\" lines) instead of generating;"
                     " the largest connected component is used");
  ws_cmd->add_option("--export-graph", ws_export, "Also write the graph as an edge list");
  ws_cmd->callback([&] {
    apply_config_file(ws_cmd, ws_opts.config);
    DemoConfig config;
    config.n = ws_n;
    config.rewire_prob = ws_rewire;
    config.observe_frac = ws_observe;
    config.gamma = ws_opts.gamma;
    config.hyper = make_hyper(ws_opts);
    config.mcmc = make_mcmc(ws_opts);
    config.seed = ws_opts.seed;
    config.basis_budget = ws_opts.basis;
    config.graph_file = ws_graph;
    DemoResult result = run_ws_demo(config);
    const fs::path dir = prepare_out_dir(ws_opts.out);
    write_chain_artifacts(dir, result.trace, result.summary, result.times);
    if (!ws_export.empty()) write_edge_list_file(result.graph, ws_export);
    report_demo("ws-demo", result, dir);
  });

  // --- mnist ----------------------------------------------------------------
  auto* mnist_cmd = app.add_subcommand(
      "mnist", "Classify one digit against another on a k-NN image graph (IDX files)");
  CommonOpts mnist_opts;
  mnist_opts.iters = 4000;
  mnist_opts.burnin = 800;
  MnistConfig mnist_config;
  std::vector<int> mnist_digits = {4, 9};
  add_common(mnist_cmd, mnist_opts);
  mnist_cmd->add_option("--train-images", mnist_config.train_images, "IDX image file");
  mnist_cmd->add_option("--train-labels", mnist_config.train_labels, "IDX label file");
  mnist_cmd->add_option("--test-images", mnist_config.test_images, "IDX image file");
  mnist_cmd->add_option("--test-labels", mnist_config.test_labels, "IDX label file");
  mnist_cmd->add_option("--digits", mnist_digits, "The two digits to separate (zero one)")
      ->expected(2)
      ->capture_default_str();
  mnist_cmd->add_option("--pca", mnist_config.pca_dims, "Principal components kept")
      ->capture_default_str();
  mnist_cmd->add_option("--knn", mnist_config.knn, "Neighbours per image")
      ->capture_default_str();
  mnist_cmd->add_option("--train-subsample", mnist_config.train_subsample,
                        "Stratified subsample of the training images (0 = all)")
      ->capture_default_str();
  mnist_cmd->add_option("--test-subsample", mnist_config.test_subsample,
                        "Stratified subsample of the test images (0 = all)")
      ->capture_default_str();
  mnist_cmd->callback([&] {
    apply_config_file(mnist_cmd, mnist_opts.config);
    const std::pair<const char*, const std::string*> needed[] = {
        {"--train-images", &mnist_config.train_images},
        {"--train-labels", &mnist_config.train_labels},
        {"--test-images", &mnist_config.test_images},
        {"--test-labels", &mnist_config.test_labels}};
    for (const auto& [flag, given] : needed)
      if (given->empty()) throw CLI::RequiredError(flag);
    mnist_config.digit_zero = mnist_digits[0];
    mnist_config.digit_one = mnist_digits[1];
    mnist_config.gamma = mnist_opts.gamma;
    mnist_config.hyper = make_hyper(mnist_opts);
    mnist_config.mcmc = make_mcmc(mnist_opts);
    mnist_config.seed = mnist_opts.seed;
    mnist_config.basis_budget = mnist_opts.basis;
    MnistResult result = run_mnist(mnist_config);
    const fs::path dir = prepare_out_dir(mnist_opts.out);
    write_chain_artifacts(dir, result.trace, result.summary, result.times);
    std::cout << "mnist: n=" << result.n << " train=" << result.num_train
              << " test=" << result.num_test << " test_accuracy=" << result.test_accuracy
              << " accept=" << result.summary.acceptance_rate << '\n'
              << "artifacts in " << dir.string() << '\n';
  });

  // --- tracking -------------------------------------------------------------
  auto* track_cmd = app.add_subcommand(
      "tracking", "Recover a moving disc on a w x h x frames grid from noisy pixel labels");
  CommonOpts track_opts;
  track_opts.iters = 8000;
  track_opts.burnin = 2000;
  track_opts.thin = 6;
  TrackingConfig track_config;
  bool track_full = false;
  add_common(track_cmd, track_opts);
  track_cmd->add_option("--width", track_config.scene.width, "Frame width")
      ->capture_default_str();
  track_cmd->add_option("--height", track_config.scene.height, "Frame height")
      ->capture_default_str();
  track_cmd->add_option("--frames", track_config.scene.frames, "Frame count")
      ->capture_default_str();
  track_cmd->add_option("--radius", track_config.scene.radius,
                        "Object radius (0 = 10% of the frame)")
      ->capture_default_str();
  track_cmd->add_option("--unobserved-frac", track_config.scene.unobserved_frac,
                        "Fraction of pixels hidden")
      ->capture_default_str();
  track_cmd->add_option("--corrupt-frame", track_config.scene.corrupt_frame,
                        "0-based frame for the spurious disc (-2 = middle, -1 = none)")
      ->capture_default_str();
  track_cmd->add_option("--spurious-radius", track_config.scene.spurious_radius,
                        "Spurious disc radius (0 = 20% of the object radius)")
      ->capture_default_str();
  track_cmd->add_flag("--full", track_full,
                      "Original 100x100x9 scene (90000 vertices; slow, not for CI)");
  track_cmd->callback([&] {
    apply_config_file(track_cmd, track_opts.config);
    if (track_full) {
      track_config.scene.width = 100;
      track_config.scene.height = 100;
      track_config.scene.frames = 9;
    }
    track_config.gamma = track_opts.gamma;
    track_config.hyper = make_hyper(track_opts);
    track_config.mcmc = make_mcmc(track_opts);
    track_config.seed = track_opts.seed;
    track_config.basis_budget = track_opts.basis;
    TrackingResult result = run_tracking(track_config);
    const fs::path dir = prepare_out_dir(track_opts.out);
    write_chain_artifacts(dir, result.trace, result.summary, result.times);
    const int w = result.scene.stack.width, h = result.scene.stack.height;
    const int pixels = w * h;
    for (int t = 0; t < result.scene.stack.frames; ++t) {
      const std::string stem = "frame_" + std::to_string(t) + "_";
      write_pgm(result.summary.mean.segment(t * pixels, pixels), w, h,
                (dir / (stem + "mean.pgm")).string());
      Eigen::VectorXd hard(pixels);
      for (int i = 0; i < pixels; ++i)
        hard[i] = result.summary.hard_label[t * pixels + i];
      write_pgm(hard, w, h, (dir / (stem + "hard.pgm")).string());
      write_pgm((result.summary.upper - result.summary.lower).segment(t * pixels, pixels),
                w, h, (dir / (stem + "ciwidth.pgm")).string());
    }
    std::cout << "tracking: n=" << result.scene.stack.size() << " iou=" << result.iou
              << " spurious_suppressed=" << (result.spurious_suppressed ? "yes" : "no")
              << " boundary_ci=" << result.boundary_ci_width
              << " interior_ci=" << result.interior_ci_width
              << " accept=" << result.summary.acceptance_rate << '\n'
              << "artifacts in " << dir.string() << '\n';
  });

  // --- bench ---------------------------------------------------------------
  auto* bench_cmd = app.add_subcommand(
      "bench", "Wall-clock and accuracy of the truncated chain vs the full baseline");
  CommonOpts bench_opts;
  bench_opts.iters = 1500;
  bench_opts.burnin = 300;
  bench_opts.thin = 3;
  BenchConfig bench_config;
  add_common(bench_cmd, bench_opts);
  bench_cmd->add_option("--sizes", bench_config.sizes, "Ascending subsample sizes")
      ->capture_default_str();
  bench_cmd->add_option("--reps", bench_config.seeds, "Repetitions per size")
      ->capture_default_str();
  bench_cmd->add_option("--test-frac", bench_config.test_frac,
                        "Held-out fraction of each subsample")
      ->capture_default_str();
  bench_cmd->add_option("--train-images", bench_config.train_images,
                        "IDX image file (omit for a synthetic two-cluster pool)");
  bench_cmd->add_option("--train-labels", bench_config.train_labels, "IDX label file");
  bench_cmd->add_option("--test-images", bench_config.test_images,
                        "Optional extra IDX images merged into the pool");
  bench_cmd->add_option("--test-labels", bench_config.test_labels, "Labels for the extras");
  bench_cmd->add_option("--pca", bench_config.pca_dims, "Principal components kept")
      ->capture_default_str();
  bench_cmd->add_option("--knn", bench_config.knn, "Neighbours per point")
      ->capture_default_str();
  bench_cmd->add_option("--dims", bench_config.synthetic_dims, "Synthetic pool dimension")
      ->capture_default_str();
  bench_cmd->add_option("--separation", bench_config.synthetic_separation,
                        "Synthetic cluster mean separation")
      ->capture_default_str();
  bench_cmd->callback([&] {
    apply_config_file(bench_cmd, bench_opts.config);
    bench_config.gamma = bench_opts.gamma;
    bench_config.hyper = make_hyper(bench_opts);
    bench_config.mcmc = make_mcmc(bench_opts);
    bench_config.seed = bench_opts.seed;
    bench_config.basis_budget = bench_opts.basis;
    std::vector<BenchRow> rows = bench_scaling(bench_config);
    const fs::path dir = prepare_out_dir(bench_opts.out);
    write_text_file(dir / "timing.csv", [&](std::ostream& o) { write_bench_csv(rows, o); });
    for (const auto& row : rows)
      std::cout << "bench: size=" << row.size << " method=" << row.method
                << " seconds=" << row.seconds << " accuracy=" << row.accuracy << '\n';
    std::cout << "artifacts in " << dir.string() << '\n';
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
