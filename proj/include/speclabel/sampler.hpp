#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <utility>
#include <vector>

#include "speclabel/model.hpp"
#include "speclabel/spectral.hpp"

namespace speclabel {

// Binary observations on a subset of vertices.
class LabelData {
 public:
  // observed holds (vertex, label) pairs with labels in {0,1}; vertices must
  // be unique and in range. Throws std::invalid_argument otherwise.
  LabelData(int n, const std::vector<std::pair<int, int>>& observed);

  int num_vertices() const { return static_cast<int>(labels_.size()); }
  int num_observed() const { return observed_count_; }
  bool observed(int v) const { return labels_[v] >= 0; }
  int label(int v) const { return labels_[v]; }  // -1 when unobserved

 private:
  std::vector<signed char> labels_;
  int observed_count_ = 0;
};

// Current point of the Markov chain.
struct ChainState {
  Eigen::VectorXd latent;  // one auxiliary Gaussian per vertex
  Eigen::VectorXd coeffs;  // series coefficients, length == level
  int level = 1;           // truncation level
  double scale = 1.0;      // global prior precision scale
};

enum class Side { positive, negative };

// One draw from a unit-variance normal restricted to a half-line. Uses plain
// rejection while the allowed side keeps decent mass and an exponential
// envelope otherwise, so extreme means (|mean| of 30 and beyond) are safe.
double truncated_normal(double mean, Side side, std::mt19937_64& rng);

// The label function evaluated at every vertex: sum_i coeffs[i] u^(i).
Eigen::VectorXd field(const ChainState& state, const SpectralBasis& basis);

// Latent update: unobserved vertices get a plain normal around the field,
// observed ones a half-line normal matching their label's sign.
ChainState sample_latent(const ChainState& state, const LabelData& data,
                         const SpectralBasis& basis, std::mt19937_64& rng);

// What to do when a proposed level exceeds the eigenpairs on hand.
enum class ExhaustPolicy { reject, extend };

struct RjResult {
  ChainState state;
  bool accepted = false;
};

// Reversible-jump update of (coeffs, level). On acceptance all coefficients
// are redrawn from their exact conditional; on rejection the state is the
// input. With ExhaustPolicy::extend the basis argument may grow (for
// iterative bases this needs the matrix the basis came from).
RjResult rj_update(const ChainState& state, SpectralBasis& basis, const Hyperparams& hyper,
                   ExhaustPolicy policy, std::mt19937_64& rng,
                   const Eigen::SparseMatrix<double>* matrix = nullptr);

// Conjugate gamma update of the scale.
ChainState sample_scale(const ChainState& state, const SpectralBasis& basis,
                        const Hyperparams& hyper, std::mt19937_64& rng);

struct McmcSettings {
  std::int64_t iterations = 10000;
  std::int64_t burnin = 2000;
  int thinning = 5;
  std::uint64_t seed = 0;
  ExhaustPolicy on_exhaust = ExhaustPolicy::reject;

  void validate() const;
};

// Full record of one chain: per-iteration diagnostics plus thinned
// post-burn-in samples of the per-vertex success probabilities.
struct Trace {
  int n = 0;
  std::int64_t iterations = 0;
  std::int64_t burnin = 0;
  int thinning = 1;
  std::vector<int> level;                 // one entry per iteration
  std::vector<double> scale;
  std::vector<unsigned char> accepted;
  std::vector<std::int64_t> micros;       // wall-clock per iteration
  std::int64_t stored = 0;                // == (iterations - burnin) / thinning
  std::vector<float> soft_samples;        // stored x n, row-major

  float soft(std::int64_t s, int v) const { return soft_samples[s * n + v]; }
};

// Runs latent -> (coeffs, level) -> scale sweeps from the standard
// initialization. `matrix` is only needed for extend-on-exhaust with an
// iterative basis. Deterministic per seed.
Trace run_chain(const LabelData& data, SpectralBasis basis, const Hyperparams& hyper,
                const McmcSettings& settings,
                const Eigen::SparseMatrix<double>* matrix = nullptr);

// Untruncated baseline: the level is pinned to n (the basis must be full)
// and every sweep redraws all coefficients from their exact conditional.
Trace run_full_baseline(const LabelData& data, const SpectralBasis& basis,
                        const Hyperparams& hyper, const McmcSettings& settings);

struct PosteriorSummary {
  Eigen::VectorXd mean;                   // posterior mean success probability
  Eigen::VectorXd lower, upper;           // pointwise credible band
  std::vector<unsigned char> hard_label;  // 1 iff mean > 0.5
  std::vector<std::pair<int, std::int64_t>> level_histogram;  // post-burn-in
  double acceptance_rate = 0.0;           // post-burn-in
};

// Per-vertex mean and empirical central credible band of the stored success
// probabilities (band edges widened to the mean in the rare heavy-tail case
// so lower <= mean <= upper always holds).
PosteriorSummary summarize(const Trace& trace, double level = 0.95);

// Fraction of eval_set vertices whose hard label matches truth.
double accuracy(const PosteriorSummary& summary, const std::vector<int>& truth,
                const std::vector<int>& eval_set);

// CSV schemas: trace -> iter,k,c,accepted,micros_per_iter
//              summary -> vertex,mean,lo,hi,hard_label (1-based vertices)
//              level histogram -> k,count
void write_trace_csv(const Trace& trace, std::ostream& out);
void write_summary_csv(const PosteriorSummary& summary, std::ostream& out);
void write_level_histogram_csv(const PosteriorSummary& summary, std::ostream& out);

}  // namespace speclabel
