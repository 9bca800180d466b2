#include "speclabel/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace speclabel {

namespace {

// Largest standardized bound for which plain rejection keeps at least 0.3
// acceptance mass (the 0.7 normal quantile).
constexpr double kPlainRejectionBound = 0.5244005127080407;

// Z ~ N(0,1) conditioned on Z >= a.
double std_normal_lower(double a, std::mt19937_64& rng) {
  if (a <= kPlainRejectionBound) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
      const double x = gauss(rng);
      if (x >= a) return x;
    }
  }
  // Exponential envelope anchored at the boundary; acceptance stays near 1
  // however far out the boundary sits.
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  std::exponential_distribution<double> expo(rate);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    const double x = a + expo(rng);
    const double d = x - rate;
    if (unif(rng) <= std::exp(-0.5 * d * d)) return x;
  }
}

void check_state(const ChainState& state, const SpectralBasis& basis) {
  if (state.level < 1 || state.level > basis.size())
    throw std::invalid_argument("chain state: level outside the available basis");
  if (state.coeffs.size() != state.level)
    throw std::invalid_argument("chain state: coefficient count must equal the level");
  if (!(state.scale > 0.0))
    throw std::invalid_argument("chain state: scale must be positive");
  if (state.latent.size() != basis.n)
    throw std::invalid_argument("chain state: latent size must match the graph");
}

// Coefficient i given (latent, level, scale) is normal with precision
// 1 + scale * tau_i around the shrunk projection.
Eigen::VectorXd draw_conditional_coeffs(const Eigen::VectorXd& latent,
                                        const SpectralBasis& basis, int level, double scale,
                                        double q, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd coeffs(level);
  for (int i = 0; i < level; ++i) {
    const double proj = basis.eigenvectors.col(i).dot(latent);
    const double prec = 1.0 + scale * precision_factor(basis.eigenvalues[i], basis.n, q);
    coeffs[i] = proj / prec + gauss(rng) / std::sqrt(prec);
  }
  return coeffs;
}

}  // namespace

LabelData::LabelData(int n, const std::vector<std::pair<int, int>>& observed) {
  if (n < 1) throw std::invalid_argument("label data: need at least one vertex");
  labels_.assign(n, -1);
  for (const auto& [v, y] : observed) {
    if (v < 0 || v >= n) throw std::invalid_argument("label data: vertex out of range");
    if (y != 0 && y != 1) throw std::invalid_argument("label data: labels must be 0 or 1");
    if (labels_[v] != -1) throw std::invalid_argument("label data: duplicate vertex");
    labels_[v] = static_cast<signed char>(y);
    ++observed_count_;
  }
}

double truncated_normal(double mean, Side side, std::mt19937_64& rng) {
  if (!std::isfinite(mean)) throw std::invalid_argument("truncated_normal: mean must be finite");
  if (side == Side::positive) return mean + std_normal_lower(-mean, rng);
  return mean - std_normal_lower(mean, rng);
}

Eigen::VectorXd field(const ChainState& state, const SpectralBasis& basis) {
  check_state(state, basis);
  return basis.eigenvectors.leftCols(state.level) * state.coeffs;
}

ChainState sample_latent(const ChainState& state, const LabelData& data,
                         const SpectralBasis& basis, std::mt19937_64& rng) {
  if (data.num_vertices() != basis.n)
    throw std::invalid_argument("sample_latent: data size does not match basis");
  const Eigen::VectorXd f = field(state, basis);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ChainState out = state;
  for (int v = 0; v < basis.n; ++v) {
    if (!data.observed(v))
      out.latent[v] = f[v] + gauss(rng);
    else
      out.latent[v] =
          truncated_normal(f[v], data.label(v) == 1 ? Side::positive : Side::negative, rng);
  }
  return out;
}

RjResult rj_update(const ChainState& state, SpectralBasis& basis, const Hyperparams& hyper,
                   ExhaustPolicy policy, std::mt19937_64& rng,
                   const Eigen::SparseMatrix<double>* matrix) {
  check_state(state, basis);
  const int k = state.level;
  const int k_new = k + hyper.proposal.sample(rng);
  if (k_new < 1 || k_new > basis.n) return {state, false};
  if (k_new > basis.size()) {
    if (policy == ExhaustPolicy::reject) return {state, false};
    basis = extend_basis(basis, matrix, k_new - basis.size());
  }

  const int lo = std::min(k, k_new), hi = std::max(k, k_new);
  Eigen::VectorXd proj = Eigen::VectorXd::Zero(hi);
  for (int i = lo; i < hi; ++i) proj[i] = basis.eigenvectors.col(i).dot(state.latent);
  const double log_ratio =
      log_acceptance_ratio_projected(k, k_new, proj, state.scale, basis, hyper);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  if (!(log_ratio >= 0.0) && !(u < std::exp(log_ratio))) return {state, false};

  ChainState out = state;
  out.level = k_new;
  out.coeffs = draw_conditional_coeffs(state.latent, basis, k_new, state.scale,
                                       hyper.laplacian_power, rng);
  return {std::move(out), true};
}

ChainState sample_scale(const ChainState& state, const SpectralBasis& basis,
                        const Hyperparams& hyper, std::mt19937_64& rng) {
  check_state(state, basis);
  double rate = hyper.scale_rate;
  for (int i = 0; i < state.level; ++i)
    rate += 0.5 * precision_factor(basis.eigenvalues[i], basis.n, hyper.laplacian_power) *
            state.coeffs[i] * state.coeffs[i];
  const double shape = hyper.scale_shape + 0.5 * state.level;
  if (!(rate > 0.0))
    throw std::runtime_error("sample_scale: degenerate posterior (zero rate); "
                             "all coefficients vanished under an improper prior");
  std::gamma_distribution<double> gam(shape, 1.0 / rate);
  ChainState out = state;
  out.scale = std::max(gam(rng), std::numeric_limits<double>::min());
  return out;
}

void McmcSettings::validate() const {
  if (iterations < 1) throw std::invalid_argument("mcmc: need at least one iteration");
  if (burnin < 0 || burnin >= iterations)
    throw std::invalid_argument("mcmc: burn-in must lie inside the run");
  if (thinning < 1) throw std::invalid_argument("mcmc: thinning must be positive");
}

namespace {

ChainState initial_state(const SpectralBasis& basis, const Hyperparams& hyper,
                         std::mt19937_64& rng, int forced_level) {
  ChainState state;
  if (forced_level > 0) {
    state.level = forced_level;
  } else if (hyper.truncation_rate > 0.0) {
    const int guess = static_cast<int>(std::ceil(1.0 / hyper.truncation_rate));
    state.level = std::clamp(guess, 1, basis.size());
  } else {
    state.level = std::min(10, basis.size());
  }
  state.scale = 1.0;
  // Coefficients start from their conditional given a zero latent vector, not
  // from the prior: the prior variance 1/(c tau_i) is nearly flat on the
  // smoothest modes (tau_1 ~ n^-2q), and a draw from it would launch the
  // chain from an astronomically large field. This keeps the first field
  // O(1) while still guaranteeing sum tau_i g_i^2 > 0 for the scale update.
  std::normal_distribution<double> gauss(0.0, 1.0);
  state.coeffs.resize(state.level);
  for (int i = 0; i < state.level; ++i) {
    const double prec =
        1.0 +
        state.scale * precision_factor(basis.eigenvalues[i], basis.n, hyper.laplacian_power);
    state.coeffs[i] = gauss(rng) / std::sqrt(prec);
  }
  state.latent = Eigen::VectorXd::Zero(basis.n);  // replaced by the first latent update
  return state;
}

Trace run_sweeps(const LabelData& data, SpectralBasis& basis, const Hyperparams& hyper,
                 const McmcSettings& settings, const Eigen::SparseMatrix<double>* matrix,
                 bool fixed_level) {
  settings.validate();
  hyper.validate();
  if (data.num_vertices() != basis.n)
    throw std::invalid_argument("run_chain: data size does not match basis");

  std::mt19937_64 rng(settings.seed);
  ChainState state = initial_state(basis, hyper, rng, fixed_level ? basis.size() : 0);

  Trace trace;
  trace.n = basis.n;
  trace.iterations = settings.iterations;
  trace.burnin = settings.burnin;
  trace.thinning = settings.thinning;
  const std::int64_t expected = (settings.iterations - settings.burnin) / settings.thinning;
  trace.level.reserve(settings.iterations);
  trace.scale.reserve(settings.iterations);
  trace.accepted.reserve(settings.iterations);
  trace.micros.reserve(settings.iterations);
  trace.soft_samples.reserve(expected * basis.n);

  for (std::int64_t t = 1; t <= settings.iterations; ++t) {
    const auto tic = std::chrono::steady_clock::now();
    state = sample_latent(state, data, basis, rng);
    bool accepted;
    if (fixed_level) {
      state.coeffs = draw_conditional_coeffs(state.latent, basis, state.level, state.scale,
                                             hyper.laplacian_power, rng);
      accepted = true;
    } else {
      RjResult rj = rj_update(state, basis, hyper, settings.on_exhaust, rng, matrix);
      state = std::move(rj.state);
      accepted = rj.accepted;
    }
    state = sample_scale(state, basis, hyper, rng);
    const auto toc = std::chrono::steady_clock::now();

    trace.level.push_back(state.level);
    trace.scale.push_back(state.scale);
    trace.accepted.push_back(accepted ? 1 : 0);
    trace.micros.push_back(
        std::chrono::duration_cast<std::chrono::microseconds>(toc - tic).count());

    if (t > settings.burnin && (t - settings.burnin) % settings.thinning == 0) {
      const Eigen::VectorXd f = field(state, basis);
      for (int v = 0; v < basis.n; ++v)
        trace.soft_samples.push_back(static_cast<float>(normal_cdf(f[v])));
      ++trace.stored;
    }
  }
  if (trace.stored != expected)
    throw std::logic_error("run_chain: stored sample accounting is off");
  return trace;
}

}  // namespace

Trace run_chain(const LabelData& data, SpectralBasis basis, const Hyperparams& hyper,
                const McmcSettings& settings, const Eigen::SparseMatrix<double>* matrix) {
  return run_sweeps(data, basis, hyper, settings, matrix, false);
}

Trace run_full_baseline(const LabelData& data, const SpectralBasis& basis,
                        const Hyperparams& hyper, const McmcSettings& settings) {
  if (basis.size() != basis.n)
    throw std::invalid_argument("run_full_baseline: needs the full basis (m == n)");
  SpectralBasis local = basis;
  return run_sweeps(data, local, hyper, settings, nullptr, true);
}

namespace {
// Linear-interpolation order statistic (the common "type 7" definition).
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t s = sorted.size();
  if (s == 1) return sorted[0];
  const double pos = p * static_cast<double>(s - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= s) return sorted[s - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}
}  // namespace

PosteriorSummary summarize(const Trace& trace, double level) {
  if (trace.stored < 1) throw std::invalid_argument("summarize: trace holds no samples");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("summarize: credible level must lie in (0,1)");
  const double alpha = 0.5 * (1.0 - level);

  PosteriorSummary out;
  out.mean.resize(trace.n);
  out.lower.resize(trace.n);
  out.upper.resize(trace.n);
  out.hard_label.resize(trace.n);
  std::vector<double> column(trace.stored);
  for (int v = 0; v < trace.n; ++v) {
    double acc = 0.0;
    for (std::int64_t s = 0; s < trace.stored; ++s) {
      column[s] = trace.soft(s, v);
      acc += column[s];
    }
    const double mean = acc / static_cast<double>(trace.stored);
    std::sort(column.begin(), column.end());
    out.mean[v] = mean;
    out.lower[v] = std::min(quantile_sorted(column, alpha), mean);
    out.upper[v] = std::max(quantile_sorted(column, 1.0 - alpha), mean);
    out.hard_label[v] = mean > 0.5 ? 1 : 0;
  }

  std::map<int, std::int64_t> hist;
  std::int64_t accepted = 0, total = 0;
  for (std::int64_t t = trace.burnin; t < trace.iterations; ++t) {
    ++hist[trace.level[t]];
    accepted += trace.accepted[t];
    ++total;
  }
  out.level_histogram.assign(hist.begin(), hist.end());
  out.acceptance_rate = total > 0 ? static_cast<double>(accepted) / total : 0.0;
  return out;
}

double accuracy(const PosteriorSummary& summary, const std::vector<int>& truth,
                const std::vector<int>& eval_set) {
  const int n = static_cast<int>(summary.hard_label.size());
  if (static_cast<int>(truth.size()) != n)
    throw std::invalid_argument("accuracy: truth size does not match summary");
  if (eval_set.empty()) throw std::invalid_argument("accuracy: empty evaluation set");
  std::int64_t hits = 0;
  for (int v : eval_set) {
    if (v < 0 || v >= n) throw std::invalid_argument("accuracy: vertex out of range");
    if (truth[v] != 0 && truth[v] != 1)
      throw std::invalid_argument("accuracy: truth must be 0/1 on the evaluation set");
    hits += summary.hard_label[v] == truth[v] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(eval_set.size());
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << "iter,k,c,accepted,micros_per_iter\n";
  char buf[64];
  for (std::int64_t t = 0; t < trace.iterations; ++t) {
    std::snprintf(buf, sizeof(buf), "%.17g", trace.scale[t]);
    out << (t + 1) << ',' << trace.level[t] << ',' << buf << ','
        << static_cast<int>(trace.accepted[t]) << ',' << trace.micros[t] << '\n';
  }
}

void write_summary_csv(const PosteriorSummary& summary, std::ostream& out) {
  out << "vertex,mean,lo,hi,hard_label\n";
  char buf[160];
  for (int v = 0; v < static_cast<int>(summary.hard_label.size()); ++v) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%d", v + 1, summary.mean[v],
                  summary.lower[v], summary.upper[v], static_cast<int>(summary.hard_label[v]));
    out << buf << '\n';
  }
}

void write_level_histogram_csv(const PosteriorSummary& summary, std::ostream& out) {
  out << "k,count\n";
  for (const auto& [k, count] : summary.level_histogram) out << k << ',' << count << '\n';
}

}  // namespace speclabel
