#pragma once

#include <Eigen/Core>

#include <random>
#include <stdexcept>
#include <vector>

#include "speclabel/spectral.hpp"

namespace speclabel {

// Standard normal CDF (the probit link).
double normal_cdf(double x);

// Discrete random-walk proposal over truncation-level offsets.
struct ProposalSpec {
  std::vector<int> offsets;
  std::vector<double> probabilities;

  // Offsets -2..2 with Binomial(4, 1/2) weights.
  static ProposalSpec binomial_default();
  // Offset 0 with probability 1 (fixed-level chain).
  static ProposalSpec point_mass();

  // Throws std::invalid_argument unless offsets are distinct and the
  // probabilities are positive and sum to 1 within 1e-12.
  void validate() const;
  bool is_symmetric() const;
  int sample(std::mt19937_64& rng) const;
  double log_probability(int offset) const;  // -inf for unsupported offsets
};

struct Hyperparams {
  double laplacian_power = 2.0;  // exponent q applied to (eigenvalue + 1/n^2)
  double truncation_rate = 0.0;  // gamma: exponential decay of the level prior
  double scale_shape = 0.0;      // gamma prior on the scale, shape/rate; 0/0 is
  double scale_rate = 0.0;       // the improper flat-in-log choice
  ProposalSpec proposal = ProposalSpec::binomial_default();

  void validate() const;
};

// Thrown when an operation needs eigenpairs beyond the ones a basis holds;
// the caller decides whether to extend the basis or treat it as a rejection.
class BasisExhausted : public std::runtime_error {
 public:
  BasisExhausted(int requested, int available);
  int requested = 0;
  int available = 0;
};

// (eigenvalue + 1/n^2)^q, the per-coordinate prior precision factor (up to
// the global scale).
double precision_factor(double eigenvalue, int n, double q);

// log P(level = k) under P(k) proportional to exp(-gamma k) on {1..k_max}.
// Outside the support the result is -infinity.
double log_level_prior(int k, double gamma, int k_max);

// Closed-form prior mass of {1..l} when the support is {1..n}.
double level_prior_cdf(int l, double gamma, int n);

// log p(latent | level, scale) with the series coefficients integrated out.
// Throws BasisExhausted when level exceeds basis.size().
double log_marginal_latent(const Eigen::VectorXd& latent, const SpectralBasis& basis,
                           int level, double scale, const Hyperparams& hyper);

// Log acceptance ratio of the jump level -> level_new, assembled from the
// prior decay, the proposal asymmetry and the marginal-likelihood change
// accumulated over the coordinates between the two levels only. Exactly 0
// for level_new == level; -infinity outside {1..basis.n}.
double log_acceptance_ratio(int level, int level_new, const Eigen::VectorXd& latent,
                            double scale, const SpectralBasis& basis,
                            const Hyperparams& hyper);

// Same ratio, but using precomputed projections[i] = u^(i+1) . latent for
// all i < max(level, level_new); this is the sampler's O(k) hot path.
double log_acceptance_ratio_projected(int level, int level_new,
                                      const Eigen::VectorXd& projections, double scale,
                                      const SpectralBasis& basis, const Hyperparams& hyper);

}  // namespace speclabel
