#include "speclabel/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace speclabel {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(s / (1 + s)) without cancellation for either tiny or huge s.
double log_shrinkage(double s) {
  return s > 1.0 ? -std::log1p(1.0 / s) : std::log(s) - std::log1p(s);
}

// One coordinate's contribution to 2 * log p(latent | level, scale).
double coordinate_term(double projection, double eigenvalue, int n, double q, double scale) {
  const double s = scale * precision_factor(eigenvalue, n, q);
  return log_shrinkage(s) + projection * projection / (1.0 + s);
}
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2_v<double> / 2.0); }

ProposalSpec ProposalSpec::binomial_default() {
  return {{-2, -1, 0, 1, 2}, {0.0625, 0.25, 0.375, 0.25, 0.0625}};
}

ProposalSpec ProposalSpec::point_mass() { return {{0}, {1.0}}; }

void ProposalSpec::validate() const {
  if (offsets.empty() || offsets.size() != probabilities.size())
    throw std::invalid_argument("proposal: offsets and probabilities must match and be non-empty");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p > 0.0)) throw std::invalid_argument("proposal: probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("proposal: probabilities must sum to 1");
  std::vector<int> sorted = offsets;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("proposal: duplicate offset");
}

bool ProposalSpec::is_symmetric() const {
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double back = std::exp(log_probability(-offsets[i]));
    if (std::abs(back - probabilities[i]) > 1e-12) return false;
  }
  return true;
}

int ProposalSpec::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    u -= probabilities[i];
    if (u < 0.0) return offsets[i];
  }
  return offsets.back();  // guard against rounding in the cumulative sum
}

double ProposalSpec::log_probability(int offset) const {
  for (std::size_t i = 0; i < offsets.size(); ++i)
    if (offsets[i] == offset) return std::log(probabilities[i]);
  return kNegInf;
}

void Hyperparams::validate() const {
  if (!(laplacian_power >= 0.0))
    throw std::invalid_argument("hyperparams: laplacian power must be non-negative");
  if (!(truncation_rate >= 0.0))
    throw std::invalid_argument("hyperparams: truncation rate must be non-negative");
  if (!(scale_shape >= 0.0) || !(scale_rate >= 0.0))
    throw std::invalid_argument("hyperparams: scale prior parameters must be non-negative");
  proposal.validate();
}

BasisExhausted::BasisExhausted(int req, int avail)
    : std::runtime_error("basis exhausted: need eigenpair " + std::to_string(req) +
                         " but the basis holds " + std::to_string(avail)),
      requested(req),
      available(avail) {}

double precision_factor(double eigenvalue, int n, double q) {
  if (n < 1) throw std::invalid_argument("precision_factor: n must be positive");
  if (!(q >= 0.0)) throw std::invalid_argument("precision_factor: q must be non-negative");
  const double shifted = eigenvalue + 1.0 / (static_cast<double>(n) * n);
  if (!(shifted > 0.0))
    throw std::invalid_argument("precision_factor: eigenvalue too negative");
  return std::pow(shifted, q);
}

double log_level_prior(int k, double gamma, int k_max) {
  if (k_max < 1) throw std::invalid_argument("log_level_prior: k_max must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("log_level_prior: gamma must be non-negative");
  if (k < 1 || k > k_max) return kNegInf;
  if (gamma == 0.0) return -std::log(static_cast<double>(k_max));
  // normalizer: sum_{l=1..k_max} e^{-gamma l} = e^{-gamma} (1-e^{-gamma k_max}) / (1-e^{-gamma})
  const double log_norm =
      -gamma + std::log(-std::expm1(-gamma * k_max)) - std::log(-std::expm1(-gamma));
  return -gamma * k - log_norm;
}

double level_prior_cdf(int l, double gamma, int n) {
  if (n < 1) throw std::invalid_argument("level_prior_cdf: n must be positive");
  if (!(gamma >= 0.0)) throw std::invalid_argument("level_prior_cdf: gamma must be non-negative");
  if (l < 1) return 0.0;
  if (l >= n) return 1.0;
  if (gamma == 0.0) return static_cast<double>(l) / n;
  return std::expm1(-gamma * l) / std::expm1(-gamma * n);
}

double log_marginal_latent(const Eigen::VectorXd& latent, const SpectralBasis& basis,
                           int level, double scale, const Hyperparams& hyper) {
  const int n = basis.n;
  if (latent.size() != n)
    throw std::invalid_argument("log_marginal_latent: latent size does not match basis");
  if (level < 1) throw std::invalid_argument("log_marginal_latent: level must be positive");
  if (!(scale > 0.0)) throw std::invalid_argument("log_marginal_latent: scale must be positive");
  if (level > basis.size()) throw BasisExhausted(level, basis.size());

  double acc = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * latent.squaredNorm();
  for (int i = 0; i < level; ++i) {
    const double proj = basis.eigenvectors.col(i).dot(latent);
    acc += 0.5 * coordinate_term(proj, basis.eigenvalues[i], n, hyper.laplacian_power, scale);
  }
  return acc;
}

double log_acceptance_ratio_projected(int level, int level_new,
                                      const Eigen::VectorXd& projections, double scale,
                                      const SpectralBasis& basis, const Hyperparams& hyper) {
  if (level < 1 || level > basis.n)
    throw std::invalid_argument("log_acceptance_ratio: current level out of range");
  if (!(scale > 0.0)) throw std::invalid_argument("log_acceptance_ratio: scale must be positive");
  const int diff = level_new - level;
  if (diff == 0) return 0.0;
  if (level_new < 1 || level_new > basis.n) return kNegInf;

  const int hi = std::max(level, level_new);
  if (hi > basis.size()) throw BasisExhausted(hi, basis.size());
  if (projections.size() < hi)
    throw std::invalid_argument("log_acceptance_ratio: projections too short");

  const double fwd = hyper.proposal.log_probability(diff);
  const double bwd = hyper.proposal.log_probability(-diff);
  if (!std::isfinite(fwd))
    throw std::invalid_argument("log_acceptance_ratio: jump is not in the proposal support");
  if (!std::isfinite(bwd)) return kNegInf;  // irreversible move: certain rejection

  double acc = -hyper.truncation_rate * diff + bwd - fwd;
  const double dir = diff > 0 ? 0.5 : -0.5;
  for (int i = std::min(level, level_new); i < hi; ++i)
    acc += dir * coordinate_term(projections[i], basis.eigenvalues[i], basis.n,
                                 hyper.laplacian_power, scale);
  return acc;
}

double log_acceptance_ratio(int level, int level_new, const Eigen::VectorXd& latent,
                            double scale, const SpectralBasis& basis,
                            const Hyperparams& hyper) {
  if (latent.size() != basis.n)
    throw std::invalid_argument("log_acceptance_ratio: latent size does not match basis");
  if (level_new < 1 || level_new > basis.n || level_new == level) {
    // no coordinates change hands; delegate for validation and the sentinel
    return log_acceptance_ratio_projected(level, level_new, Eigen::VectorXd(), scale,
                                          basis, hyper);
  }
  const int hi = std::max(level, level_new);
  if (hi > basis.size()) throw BasisExhausted(hi, basis.size());
  Eigen::VectorXd projections = Eigen::VectorXd::Zero(hi);
  for (int i = std::min(level, level_new); i < hi; ++i)
    projections[i] = basis.eigenvectors.col(i).dot(latent);
  return log_acceptance_ratio_projected(level, level_new, projections, scale, basis, hyper);
}

}  // namespace speclabel
