#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <stdexcept>
#include <string>

namespace speclabel {

enum class BasisSource : unsigned char {
  closed_form_path = 0,
  closed_form_grid = 1,
  iterative = 2,
};

// The m smallest Laplacian eigenpairs of an n-vertex graph, ascending.
// Columns are orthonormal and each eigenvector's first nonzero component is
// positive. Treated as immutable: extend_basis returns a new value whose
// first m pairs are bit-for-bit those of the input.
struct SpectralBasis {
  int n = 0;
  Eigen::VectorXd eigenvalues;   // size m, ascending
  Eigen::MatrixXd eigenvectors;  // n x m
  BasisSource source = BasisSource::iterative;
  std::array<int, 3> grid_dims{0, 0, 0};  // nx, ny, nt for closed_form_grid

  int size() const { return static_cast<int>(eigenvalues.size()); }
};

// Raised when the iterative solver cannot reach the requested tolerance
// within its iteration budget; there is no silent partial result.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed-form eigenpairs of the n-path Laplacian: eigenvalue j (0-based) is
// 4 sin^2(pi j / (2n)) with the cosine eigenvector of frequency j.
SpectralBasis path_eigenpairs(int n, int m);

// Closed-form eigenpairs of the nx*ny*nt grid Laplacian: sums of 1-D path
// eigenvalues with tensor-product eigenvectors, the m smallest kept. Ties
// are ordered by (eigenvalue, x index, y index, frame index).
SpectralBasis grid3d_eigenpairs(int nx, int ny, int nt, int m);

struct EigensolveOptions {
  double tol = 1e-10;            // residual tolerance relative to the spectral scale
  std::int64_t max_iterations = 0;  // total Lanczos steps; 0 means 100 * m
};

// m smallest eigenpairs of a sparse symmetric PSD matrix. Lanczos with full
// reorthogonalization; converged Ritz pairs are locked and deflated, and a
// final probe of the orthogonal complement guards against multiplicities
// missed by a single Krylov sequence. Deterministic for fixed inputs.
SpectralBasis partial_eigensolve(const Eigen::SparseMatrix<double>& L, int m,
                                 const EigensolveOptions& opts = {});

// Appends `extra` pairs. Closed-form bases extend from their formulas and
// ignore `L`; iterative bases need the matrix they were computed from.
SpectralBasis extend_basis(const SpectralBasis& basis,
                           const Eigen::SparseMatrix<double>* L, int extra,
                           const EigensolveOptions& opts = {});

// max_i || L u_i - lambda_i u_i ||_2
double residual_check(const SpectralBasis& basis, const Eigen::SparseMatrix<double>& L);

// Binary cache: fixed header (n, m, source tag, grid dims), then eigenvalues
// and column-major eigenvectors as little-endian 64-bit floats. A reload
// reproduces the basis bit for bit.
void save_basis(const SpectralBasis& basis, const std::string& path);
SpectralBasis load_basis(const std::string& path);

}  // namespace speclabel
