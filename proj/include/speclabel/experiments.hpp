#pragma once
// Experiment harness behind the CLI: synthetic data generators, IDX image
// ingestion, the tracking scene builder, scaling benchmarks, and a driver
// per subcommand. Everything is deterministic given the config seed.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "speclabel/graph.hpp"
#include "speclabel/model.hpp"
#include "speclabel/sampler.hpp"
#include "speclabel/spectral.hpp"

namespace speclabel {

// ---------------------------------------------------------------------------
// Synthetic ground truth and label masking
// ---------------------------------------------------------------------------

/// Smooth reference field in the given eigenbasis: sum of w_k u^(k) with
/// w_1 = 0 and w_k = sqrt(n) (k-1)^{-1.5} sin(k-1) for k >= 2. Pass the full
/// basis (m == n) for the exact field; a truncated basis truncates the sum.
Eigen::VectorXd series_ground_truth(const SpectralBasis& basis);

/// series_ground_truth on the closed-form path basis.
Eigen::VectorXd path_ground_truth(int n);

/// Independent Bernoulli(Phi(field_i)) draws.
std::vector<int> draw_labels(const Eigen::VectorXd& field, std::mt19937_64& rng);

/// Keeps a uniformly random subset of exactly round(observe_frac * n) labels
/// as observed; the rest are hidden (to be used as evaluation ground truth).
LabelData mask_labels(const std::vector<int>& labels, double observe_frac,
                      std::mt19937_64& rng);

/// Complement of the observed set, ascending.
std::vector<int> hidden_vertices(const LabelData& data);

// ---------------------------------------------------------------------------
// IDX image files (the MNIST container format), PCA, k-NN features
// ---------------------------------------------------------------------------

class IdxFormatError : public std::runtime_error {
 public:
  explicit IdxFormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Images file (big-endian magic 0x00000803, dims count x rows x cols) as a
/// count x (rows*cols) matrix of intensities in [0, 255].
Eigen::MatrixXd load_idx_images(const std::string& path);

/// Labels file (big-endian magic 0x00000801) as digits 0-9.
std::vector<int> load_idx_labels(const std::string& path);

void write_idx_images(const Eigen::MatrixXd& images, int rows, int cols,
                      const std::string& path);
void write_idx_labels(const std::vector<int>& labels, const std::string& path);

/// Rows whose digit is zero_digit or one_digit, with binary labels
/// (one_digit -> 1). Original row order is preserved.
struct BinaryImageSet {
  Eigen::MatrixXd features;
  std::vector<int> labels;
};
BinaryImageSet filter_digits(const Eigen::MatrixXd& images, const std::vector<int>& digits,
                             int zero_digit, int one_digit);

/// Projections of the mean-centered rows onto the top principal directions.
/// Sign convention: each direction's largest-magnitude loading is positive.
Eigen::MatrixXd pca_project(const Eigen::MatrixXd& X, int dims);

/// Two isotropic Gaussian clusters in `dims` dimensions whose means are
/// `separation` apart; class 1 sits at the positive mean. Near-even class
/// split (class 0 gets the odd element). Stand-in for image data.
BinaryImageSet synthetic_clusters(int count, int dims, double separation,
                                  std::mt19937_64& rng);

/// Random subset of `size` rows preserving the class ratio within one image
/// per class (class-1 count = round(size * fraction of ones)).
struct Subsample {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::vector<int> source_rows;
};
Subsample stratified_subsample(const Eigen::MatrixXd& X, const std::vector<int>& y,
                               int size, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Tracking scenes on the 3-d grid
// ---------------------------------------------------------------------------

struct TrackingParams {
  int width = 20, height = 20, frames = 5;
  double radius = 0.0;           // <= 0: 10% of min(width, height)
  double unobserved_frac = 0.10;
  int corrupt_frame = -2;        // 0-based; -2 = middle frame, -1 = none
  double spurious_radius = 0.0;  // <= 0: 20% of the object radius
  double spurious_col_frac = 0.75, spurious_row_frac = 0.15;
};

/// Per-pixel observation state, indexed like the grid graph's vertices
/// (vertex = frame * width * height + row * width + col).
struct ImageStack {
  int width = 0, height = 0, frames = 0;
  std::vector<signed char> state;  // -1 unobserved, otherwise the label

  int size() const { return width * height * frames; }
  signed char at(int col, int row, int frame) const {
    return state[grid3d_vertex(width, height, col, row, frame)];
  }
};

/// A disc translating linearly corner to corner across the frames (label 1),
/// a random unobserved mask, and optionally a spurious disc written into the
/// observed labels of one frame. The truth never contains the spurious disc.
struct TrackingScene {
  ImageStack stack;
  std::vector<int> truth;              // 0/1 per vertex
  std::vector<int> spurious_vertices;  // corrupted region minus true object
};
TrackingScene make_tracking_scene(const TrackingParams& params, std::mt19937_64& rng);

/// Observed pixels of the stack as labeled vertices.
LabelData stack_labels(const ImageStack& stack);

/// Binary PGM (P5, maxval 255), row-major, v -> round(255 v). Values must
/// lie in [0, 1].
void write_pgm(const Eigen::VectorXd& values, int width, int height,
               const std::string& path);

// ---------------------------------------------------------------------------
// Experiment drivers (one per CLI subcommand)
// ---------------------------------------------------------------------------

/// Basis budget heuristic: enough room above the prior's typical truncation
/// level that on-demand extension stays rare. gamma <= 0 returns n.
int default_basis_budget(int n, double gamma);

struct StageTimes {
  std::vector<std::pair<std::string, double>> seconds;  // (stage, wall seconds)
  void add(const std::string& stage, double s) { seconds.emplace_back(stage, s); }
};

struct DemoConfig {
  int n = 500;                 // path length / ring size before rewiring
  double rewire_prob = 0.25;   // ws-demo only
  double observe_frac = 0.8;
  double gamma = -1.0;         // < 0: rule of thumb 20/n
  Hyperparams hyper;           // truncation_rate is overwritten from gamma
  McmcSettings mcmc;
  std::uint64_t seed = 0;
  int basis_budget = 0;        // <= 0: default_basis_budget
  std::string graph_file;      // ws-demo: import this edge list instead
};

struct DemoResult {
  Graph graph;
  Eigen::VectorXd truth_field;
  std::vector<int> truth_labels;
  std::vector<int> hidden;
  Trace trace;
  PosteriorSummary summary;
  double heldout_accuracy = 0.0;
  double posterior_mean_level = 0.0;
  StageTimes times;
};

DemoResult run_path_demo(const DemoConfig& config);
DemoResult run_ws_demo(const DemoConfig& config);

struct MnistConfig {
  std::string train_images, train_labels, test_images, test_labels;
  int digit_zero = 4, digit_one = 9;
  int pca_dims = 50;
  int knn = 15;
  int train_subsample = 0, test_subsample = 0;  // > 0: stratified subsample
  double gamma = -1.0;
  Hyperparams hyper;
  McmcSettings mcmc;
  std::uint64_t seed = 0;
  int basis_budget = 0;
};

struct MnistResult {
  int n = 0, num_train = 0, num_test = 0;
  Trace trace;
  PosteriorSummary summary;
  double test_accuracy = 0.0;
  StageTimes times;
};

/// Joint graph over train+test images; train labels observed, test predicted.
MnistResult run_mnist(const MnistConfig& config);

struct TrackingConfig {
  TrackingParams scene;
  double gamma = -1.0;
  Hyperparams hyper;
  McmcSettings mcmc;
  std::uint64_t seed = 0;
  int basis_budget = 0;
};

struct TrackingResult {
  TrackingScene scene;
  Trace trace;
  PosteriorSummary summary;
  double iou = 0.0;                  // hard labels vs truth
  bool spurious_suppressed = false;  // no hard 1 on the corrupted region
  double boundary_ci_width = 0.0;    // mean 95% width on truth boundary pixels
  double interior_ci_width = 0.0;    // mean width everywhere else
  StageTimes times;
};

TrackingResult run_tracking(const TrackingConfig& config);

struct BenchConfig {
  std::string train_images, train_labels, test_images, test_labels;  // optional
  int digit_zero = 4, digit_one = 9;
  std::vector<int> sizes = {250, 500, 1000, 2000, 4000};
  int pca_dims = 50;
  int knn = 15;
  double test_frac = 0.25;  // held out of each subsample for evaluation
  int seeds = 1;            // repetitions per size (seed, seed+1, ...)
  double gamma = -1.0;      // < 0: 20/size per subsample
  Hyperparams hyper;
  McmcSettings mcmc;
  std::uint64_t seed = 0;
  int basis_budget = 0;
  int synthetic_dims = 50;         // stand-in clusters when no files given
  double synthetic_separation = 6.0;
};

struct BenchRow {
  int size = 0;
  std::string method;  // "truncated" or "full"
  double seconds = 0.0;
  double accuracy = 0.0;
  std::uint64_t seed = 0;
};

/// Truncated chain vs the fixed-k full baseline on stratified subsamples of
/// increasing size; seconds cover eigensolve plus chain.
std::vector<BenchRow> bench_scaling(const BenchConfig& config);

// CSV schemas: timing -> stage,seconds; bench -> size,method,seconds,accuracy
// (two rows per size and repetition, truncated then full).
void write_timing_csv(const StageTimes& times, std::ostream& out);
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);

}  // namespace speclabel
