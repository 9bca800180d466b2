#include "speclabel/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace speclabel {
namespace {

using SpMat = Eigen::SparseMatrix<double>;

// The solver draws its start vectors from a fixed stream so that results are
// a deterministic function of (L, m, opts).
constexpr std::uint64_t kSolverSeed = 0x5eedba5e00c0ffeeULL;

// Gershgorin bound on the spectral radius; the scale for all tolerances.
double spectral_scale(const SpMat& L) {
  double best = 0.0;
  for (int k = 0; k < L.outerSize(); ++k) {
    double row = 0.0;
    for (SpMat::InnerIterator it(L, k); it; ++it) row += std::abs(it.value());
    best = std::max(best, row);
  }
  return std::max(best, 1e-30);
}

// Sign convention: first component that is clearly nonzero is made positive.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  const double thresh = 1e-8 * v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > thresh) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

struct RoundOutcome {
  std::vector<double> values;            // newly converged, ascending
  std::vector<Eigen::VectorXd> vectors;
  double bottom_ritz = std::numeric_limits<double>::infinity();
};

// One Krylov sequence restricted to the orthogonal complement of the locked
// columns. Locks the converged ascending prefix of the Ritz spectrum (at
// most lock_cap pairs) and always reports the bottom Ritz value, which the
// caller's probe uses: by interlacing it never undershoots the smallest
// eigenvalue of the complement.
RoundOutcome lanczos_round(const SpMat& L, const Eigen::MatrixXd& Q, int locked,
                           int j_cap, int lock_cap, double lock_tol,
                           double breakdown_tol, std::mt19937_64& rng,
                           std::int64_t& steps_left) {
  const int n = static_cast<int>(L.rows());
  Eigen::MatrixXd V(n, j_cap);
  Eigen::VectorXd alpha(j_cap), beta(j_cap);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::VectorXd v(n), w(n);
  for (int attempt = 0;; ++attempt) {
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    if (locked > 0) {
      auto Ql = Q.leftCols(locked);
      v.noalias() -= Ql * (Ql.transpose() * v);
      v.noalias() -= Ql * (Ql.transpose() * v);
    }
    const double norm = v.norm();
    if (norm > 1e-6 * std::sqrt(static_cast<double>(n))) {
      v /= norm;
      break;
    }
    if (attempt == 7)
      throw ConvergenceError("eigensolver: cannot find a start vector in the complement");
  }

  int j_used = 0;
  bool breakdown = false;
  for (int j = 0; j < j_cap; ++j) {
    if (--steps_left < 0)
      throw ConvergenceError("eigensolver: iteration budget exhausted before convergence");
    V.col(j) = v;
    w.noalias() = L * v;
    alpha[j] = v.dot(w);
    w.noalias() -= alpha[j] * v;
    if (j > 0) w.noalias() -= beta[j - 1] * V.col(j - 1);

    // Full reorthogonalization; a second pass only when cancellation ate a
    // substantial part of the vector.
    const double before = std::max(w.norm(), 1e-300);
    for (int pass = 0; pass < 2; ++pass) {
      auto Vj = V.leftCols(j + 1);
      w.noalias() -= Vj * (Vj.transpose() * w);
      if (locked > 0) {
        auto Ql = Q.leftCols(locked);
        w.noalias() -= Ql * (Ql.transpose() * w);
      }
      if (pass == 0 && w.norm() >= 0.7 * before) break;
    }

    beta[j] = w.norm();
    j_used = j + 1;
    if (beta[j] <= breakdown_tol) {
      breakdown = true;  // complement's invariant subspace exhausted: Ritz pairs are exact
      break;
    }
    v = w / beta[j];
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(alpha.head(j_used), beta.head(std::max(j_used - 1, 0)),
                            Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("eigensolver: tridiagonal eigensolve failed");
  const Eigen::VectorXd& theta = es.eigenvalues();
  const Eigen::MatrixXd& S = es.eigenvectors();

  RoundOutcome out;
  out.bottom_ritz = theta[0];

  // Candidate prefix by the cheap residual estimate |beta_last * s_last|,
  // then batch-form the Ritz vectors and verify true residuals ascending.
  int cand = 0;
  while (cand < j_used && cand < std::max(lock_cap, 1)) {
    const double est = breakdown ? 0.0 : std::abs(beta[j_used - 1] * S(j_used - 1, cand));
    if (est > 16.0 * lock_tol) break;
    ++cand;
  }
  cand = std::max(cand, 1);  // always materialize the bottom pair

  Eigen::MatrixXd Y(n, cand);
  Y.noalias() = V.leftCols(j_used) * S.leftCols(cand);
  if (locked > 0) {
    auto Ql = Q.leftCols(locked);
    Y.noalias() -= Ql * (Ql.transpose() * Y);
  }
  for (int idx = 0; idx < cand; ++idx) {
    Eigen::VectorXd y = Y.col(idx);
    y.normalize();
    const double res = (L * y - theta[idx] * y).norm();
    if (idx >= lock_cap || res > lock_tol) break;  // lock an ascending prefix only
    fix_sign(y);
    out.values.push_back(theta[idx]);
    out.vectors.push_back(std::move(y));
  }
  return out;
}

// Locked eigenpairs kept ascending; inserts are appends except when the
// probe uncovers a missed multiplicity.
struct LockedSet {
  std::vector<double> values;
  Eigen::MatrixXd Q;
  int count = 0;

  void insert(int n, double value, const Eigen::VectorXd& vec) {
    if (count == Q.cols()) {
      Eigen::MatrixXd bigger(n, std::max(2 * count, 16));
      bigger.leftCols(count) = Q.leftCols(count);
      Q.swap(bigger);
    }
    const int pos = static_cast<int>(
        std::upper_bound(values.begin(), values.end(), value) - values.begin());
    for (int c = count; c > pos; --c) Q.col(c) = Q.col(c - 1);
    values.insert(values.begin() + pos, value);
    Q.col(pos) = vec;
    ++count;
  }
};

SpectralBasis run_lanczos(const SpMat& L, int m, const EigensolveOptions& opts,
                          const SpectralBasis* seed) {
  const int n = static_cast<int>(L.rows());
  if (L.cols() != n) throw std::invalid_argument("eigensolver: matrix must be square");
  if (m < 1 || m > n) throw std::invalid_argument("eigensolver: m out of range");
  if (!(opts.tol > 0)) throw std::invalid_argument("eigensolver: tolerance must be positive");

  const double scale = spectral_scale(L);
  {
    SpMat diff = SpMat(L.transpose()) - L;
    double asym = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
      for (SpMat::InnerIterator it(diff, k); it; ++it)
        asym = std::max(asym, std::abs(it.value()));
    if (asym > 1e-12 * scale)
      throw std::invalid_argument("eigensolver: matrix is not symmetric");
  }

  // Deflated Krylov rounds only pay off for a small slice of the spectrum;
  // from about a fifth of it upward (the fixed-level baseline asks for all
  // of it) a dense solve is faster and has no convergence failure modes.
  if (5 * m >= n || n <= 64) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(L)};
    if (es.info() != Eigen::Success)
      throw ConvergenceError("eigensolver: dense solve failed");
    SpectralBasis basis;
    basis.n = n;
    basis.source = BasisSource::iterative;
    basis.eigenvalues = es.eigenvalues().head(m);
    basis.eigenvectors = es.eigenvectors().leftCols(m);
    for (int j = 0; j < m; ++j) fix_sign(basis.eigenvectors.col(j));
    return basis;
  }

  const double lock_tol = std::max(opts.tol, 1e-14) * scale;
  const double breakdown_tol = 1e-13 * scale;
  const double gap_tol = std::max(8.0 * lock_tol, 1e-12 * scale);
  std::int64_t steps_left =
      opts.max_iterations > 0 ? opts.max_iterations : std::max<std::int64_t>(100LL * m, 400);

  std::mt19937_64 rng(kSolverSeed);
  LockedSet locked;
  locked.Q.resize(n, std::min(n, m + 16));
  if (seed) {
    for (int i = 0; i < seed->size(); ++i)
      locked.insert(n, seed->eigenvalues[i], seed->eigenvectors.col(i));
  }

  int stall = 0;
  while (true) {
    if (locked.count >= m) {
      if (locked.count >= n) break;
      // Probe the complement: its bottom Ritz value cannot undershoot the
      // smallest remaining eigenvalue, so anything at or above the locked
      // top certifies that no smaller (e.g. multiple) eigenvalue was missed.
      const int j_probe = std::min(n - locked.count, 96);
      RoundOutcome probe = lanczos_round(L, locked.Q, locked.count, j_probe, 0, lock_tol,
                                         breakdown_tol, rng, steps_left);
      if (probe.bottom_ritz >= locked.values[m - 1] - gap_tol) break;
    }
    const int r = n - locked.count;
    const int want = std::max(m - locked.count, 4);
    const std::int64_t grow = static_cast<std::int64_t>(2 * want + 20)
                              << std::min(stall, 12);
    const int j_cap = static_cast<int>(std::min<std::int64_t>(r, grow));
    RoundOutcome round = lanczos_round(L, locked.Q, locked.count, j_cap,
                                       std::max(m - locked.count, 8), lock_tol,
                                       breakdown_tol, rng, steps_left);
    if (round.values.empty()) {
      ++stall;
    } else {
      stall = 0;
      for (std::size_t i = 0; i < round.values.size(); ++i)
        locked.insert(n, round.values[i], round.vectors[i]);
    }
  }

  SpectralBasis basis;
  basis.n = n;
  basis.source = BasisSource::iterative;
  basis.eigenvalues = Eigen::Map<const Eigen::VectorXd>(locked.values.data(), m);
  basis.eigenvectors = locked.Q.leftCols(m);
  return basis;
}

}  // namespace

SpectralBasis path_eigenpairs(int n, int m) {
  if (n < 1) throw std::invalid_argument("path_eigenpairs: need at least one vertex");
  if (m < 1 || m > n) throw std::invalid_argument("path_eigenpairs: m out of range");
  SpectralBasis basis;
  basis.n = n;
  basis.source = BasisSource::closed_form_path;
  basis.eigenvalues.resize(m);
  basis.eigenvectors.resize(n, m);
  const double pi = std::numbers::pi;
  const double amp = std::sqrt(2.0 / n);
  for (int j = 0; j < m; ++j) {
    const double s = std::sin(pi * j / (2.0 * n));
    basis.eigenvalues[j] = 4.0 * s * s;
    if (j == 0) {
      basis.eigenvectors.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    } else {
      for (int i = 0; i < n; ++i)
        basis.eigenvectors(i, j) = amp * std::cos(pi * (i + 0.5) * j / n);
    }
  }
  return basis;
}

SpectralBasis grid3d_eigenpairs(int nx, int ny, int nt, int m) {
  if (nx < 1 || ny < 1 || nt < 1)
    throw std::invalid_argument("grid3d_eigenpairs: all dimensions must be positive");
  const std::int64_t total = static_cast<std::int64_t>(nx) * ny * nt;
  if (total > std::numeric_limits<int>::max())
    throw std::invalid_argument("grid3d_eigenpairs: grid too large");
  const int n = static_cast<int>(total);
  if (m < 1 || m > n) throw std::invalid_argument("grid3d_eigenpairs: m out of range");

  const SpectralBasis bx = path_eigenpairs(nx, nx);
  const SpectralBasis by = path_eigenpairs(ny, ny);
  const SpectralBasis bt = path_eigenpairs(nt, nt);

  struct Mode {
    double value;
    int ix, iy, it;
  };
  std::vector<Mode> modes;
  modes.reserve(n);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nt; ++k)
        modes.push_back({bx.eigenvalues[i] + by.eigenvalues[j] + bt.eigenvalues[k], i, j, k});
  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.ix != b.ix) return a.ix < b.ix;
    if (a.iy != b.iy) return a.iy < b.iy;
    return a.it < b.it;
  });

  SpectralBasis basis;
  basis.n = n;
  basis.source = BasisSource::closed_form_grid;
  basis.grid_dims = {nx, ny, nt};
  basis.eigenvalues.resize(m);
  basis.eigenvectors.resize(n, m);
  for (int s = 0; s < m; ++s) {
    const Mode& mode = modes[s];
    basis.eigenvalues[s] = mode.value;
    for (int t = 0; t < nt; ++t) {
      const double wt = bt.eigenvectors(t, mode.it);
      for (int r = 0; r < ny; ++r) {
        const double wrt = wt * by.eigenvectors(r, mode.iy);
        for (int c = 0; c < nx; ++c)
          basis.eigenvectors(static_cast<std::int64_t>(t) * nx * ny + r * nx + c, s) =
              wrt * bx.eigenvectors(c, mode.ix);
      }
    }
  }
  return basis;
}

SpectralBasis partial_eigensolve(const Eigen::SparseMatrix<double>& L, int m,
                                 const EigensolveOptions& opts) {
  return run_lanczos(L, m, opts, nullptr);
}

SpectralBasis extend_basis(const SpectralBasis& basis, const Eigen::SparseMatrix<double>* L,
                           int extra, const EigensolveOptions& opts) {
  if (extra < 0) throw std::invalid_argument("extend_basis: extra must be non-negative");
  const int m = basis.size();
  if (m < 1 || basis.n < m) throw std::invalid_argument("extend_basis: malformed basis");
  if (m + extra > basis.n)
    throw std::invalid_argument("extend_basis: cannot extend beyond the full basis");
  if (extra == 0) return basis;

  SpectralBasis grown;
  switch (basis.source) {
    case BasisSource::closed_form_path:
      grown = path_eigenpairs(basis.n, m + extra);
      break;
    case BasisSource::closed_form_grid:
      grown = grid3d_eigenpairs(basis.grid_dims[0], basis.grid_dims[1], basis.grid_dims[2],
                                m + extra);
      break;
    case BasisSource::iterative: {
      if (L == nullptr)
        throw std::invalid_argument("extend_basis: iterative basis needs its matrix");
      if (L->rows() != basis.n || L->cols() != basis.n)
        throw std::invalid_argument("extend_basis: matrix size does not match basis");
      grown = run_lanczos(*L, m + extra, opts, &basis);
      break;
    }
  }
  // The first m pairs are the input's, bit for bit.
  grown.eigenvalues.head(m) = basis.eigenvalues;
  grown.eigenvectors.leftCols(m) = basis.eigenvectors;
  return grown;
}

double residual_check(const SpectralBasis& basis, const Eigen::SparseMatrix<double>& L) {
  if (L.rows() != basis.n || L.cols() != basis.n)
    throw std::invalid_argument("residual_check: matrix size does not match basis");
  double worst = 0.0;
  for (int i = 0; i < basis.size(); ++i) {
    const double res =
        (L * basis.eigenvectors.col(i) - basis.eigenvalues[i] * basis.eigenvectors.col(i))
            .norm();
    worst = std::max(worst, res);
  }
  return worst;
}

static_assert(std::endian::native == std::endian::little,
              "basis cache assumes a little-endian host");

namespace {
constexpr char kCacheMagic[8] = {'S', 'L', 'B', 'A', 'S', 'I', 'S', '1'};
}

void save_basis(const SpectralBasis& basis, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_basis: cannot open " + path);
  const std::int64_t n = basis.n, m = basis.size();
  const unsigned char tag = static_cast<unsigned char>(basis.source);
  out.write(kCacheMagic, sizeof(kCacheMagic));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&m), sizeof(m));
  out.write(reinterpret_cast<const char*>(&tag), sizeof(tag));
  for (int d : basis.grid_dims) {
    const std::int32_t dim = d;
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  }
  out.write(reinterpret_cast<const char*>(basis.eigenvalues.data()),
            static_cast<std::streamsize>(sizeof(double)) * m);
  out.write(reinterpret_cast<const char*>(basis.eigenvectors.data()),
            static_cast<std::streamsize>(sizeof(double)) * n * m);
  if (!out) throw std::runtime_error("save_basis: write failed for " + path);
}

SpectralBasis load_basis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_basis: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kCacheMagic))
    throw std::runtime_error("load_basis: not a basis cache: " + path);
  std::int64_t n = 0, m = 0;
  unsigned char tag = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&m), sizeof(m));
  in.read(reinterpret_cast<char*>(&tag), sizeof(tag));
  std::int32_t dims[3] = {0, 0, 0};
  for (auto& d : dims) in.read(reinterpret_cast<char*>(&d), sizeof(d));
  if (!in || n < 1 || m < 1 || m > n || tag > 2)
    throw std::runtime_error("load_basis: corrupt header in " + path);

  SpectralBasis basis;
  basis.n = static_cast<int>(n);
  basis.source = static_cast<BasisSource>(tag);
  basis.grid_dims = {dims[0], dims[1], dims[2]};
  basis.eigenvalues.resize(m);
  basis.eigenvectors.resize(n, m);
  in.read(reinterpret_cast<char*>(basis.eigenvalues.data()),
          static_cast<std::streamsize>(sizeof(double)) * m);
  in.read(reinterpret_cast<char*>(basis.eigenvectors.data()),
          static_cast<std::streamsize>(sizeof(double)) * n * m);
  if (!in) throw std::runtime_error("load_basis: truncated basis cache: " + path);
  return basis;
}

}  // namespace speclabel
