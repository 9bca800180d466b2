#include "speclabel/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <utility>

namespace speclabel {

namespace {

class StageTimer {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - mark_).count();
    mark_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point mark_ = std::chrono::steady_clock::now();
};

// Uniformly random size-`count` subset of 0..n-1, ascending.
std::vector<int> choose_subset(int n, int count, std::mt19937_64& rng) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

double effective_gamma(double gamma, int n) { return gamma < 0.0 ? 20.0 / n : gamma; }

int resolve_budget(int requested, int n, double gamma) {
  if (requested > 0) return std::min(requested, n);
  return default_basis_budget(n, gamma);
}

double mean_level(const Trace& trace) {
  double acc = 0.0;
  std::int64_t count = 0;
  for (std::int64_t t = trace.burnin; t < trace.iterations; ++t) {
    acc += trace.level[t];
    ++count;
  }
  return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

}  // namespace

Eigen::VectorXd series_ground_truth(const SpectralBasis& basis) {
  if (basis.n < 2) throw std::invalid_argument("series_ground_truth: need n >= 2");
  const double root_n = std::sqrt(static_cast<double>(basis.n));
  Eigen::VectorXd weights(basis.size());
  weights[0] = 0.0;
  for (int j = 1; j < basis.size(); ++j)
    weights[j] = root_n * std::pow(static_cast<double>(j), -1.5) * std::sin(j);
  return basis.eigenvectors * weights;
}

Eigen::VectorXd path_ground_truth(int n) {
  if (n < 2) throw std::invalid_argument("path_ground_truth: need n >= 2");
  return series_ground_truth(path_eigenpairs(n, n));
}

std::vector<int> draw_labels(const Eigen::VectorXd& field, std::mt19937_64& rng) {
  if (!field.allFinite()) throw std::invalid_argument("draw_labels: field must be finite");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> labels(field.size());
  for (Eigen::Index i = 0; i < field.size(); ++i)
    labels[i] = unif(rng) < normal_cdf(field[i]) ? 1 : 0;
  return labels;
}

LabelData mask_labels(const std::vector<int>& labels, double observe_frac,
                      std::mt19937_64& rng) {
  const int n = static_cast<int>(labels.size());
  if (n < 1) throw std::invalid_argument("mask_labels: empty label vector");
  if (!(observe_frac > 0.0 && observe_frac <= 1.0))
    throw std::invalid_argument("mask_labels: observe fraction must lie in (0, 1]");
  const int keep = static_cast<int>(std::lround(observe_frac * n));
  std::vector<std::pair<int, int>> observed;
  observed.reserve(keep);
  for (int v : choose_subset(n, keep, rng)) observed.emplace_back(v, labels[v]);
  return LabelData(n, observed);
}

std::vector<int> hidden_vertices(const LabelData& data) {
  std::vector<int> hidden;
  for (int v = 0; v < data.num_vertices(); ++v)
    if (!data.observed(v)) hidden.push_back(v);
  return hidden;
}

// ---------------------------------------------------------------------------
// IDX containers
// ---------------------------------------------------------------------------

namespace {

std::vector<unsigned char> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxFormatError(path + ": cannot open");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::string& path) {
  if (offset + 4 > bytes.size())
    throw IdxFormatError(path + ": truncated at byte offset " + std::to_string(bytes.size()));
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void append_be32(std::uint32_t value, std::string& out) {
  out.push_back(static_cast<char>((value >> 24) & 0xff));
  out.push_back(static_cast<char>((value >> 16) & 0xff));
  out.push_back(static_cast<char>((value >> 8) & 0xff));
  out.push_back(static_cast<char>(value & 0xff));
}

void write_all_bytes(const std::string& payload, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace

Eigen::MatrixXd load_idx_images(const std::string& path) {
  const auto bytes = read_all_bytes(path);
  if (read_be32(bytes, 0, path) != 0x00000803u)
    throw IdxFormatError(path + ": bad image magic at byte offset 0");
  const auto count = read_be32(bytes, 4, path);
  const auto rows = read_be32(bytes, 8, path);
  const auto cols = read_be32(bytes, 12, path);
  const std::size_t expected = 16 + std::size_t{count} * rows * cols;
  if (bytes.size() < expected)
    throw IdxFormatError(path + ": truncated at byte offset " + std::to_string(bytes.size()) +
                         " (expected " + std::to_string(expected) + " bytes)");
  if (bytes.size() > expected)
    throw IdxFormatError(path + ": trailing data at byte offset " + std::to_string(expected));
  Eigen::MatrixXd images(count, std::size_t{rows} * cols);
  std::size_t at = 16;
  for (std::uint32_t i = 0; i < count; ++i)
    for (std::uint32_t p = 0; p < rows * cols; ++p) images(i, p) = bytes[at++];
  return images;
}

std::vector<int> load_idx_labels(const std::string& path) {
  const auto bytes = read_all_bytes(path);
  if (read_be32(bytes, 0, path) != 0x00000801u)
    throw IdxFormatError(path + ": bad label magic at byte offset 0");
  const auto count = read_be32(bytes, 4, path);
  const std::size_t expected = 8 + std::size_t{count};
  if (bytes.size() < expected)
    throw IdxFormatError(path + ": truncated at byte offset " + std::to_string(bytes.size()));
  if (bytes.size() > expected)
    throw IdxFormatError(path + ": trailing data at byte offset " + std::to_string(expected));
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    labels[i] = bytes[8 + i];
    if (labels[i] > 9)
      throw IdxFormatError(path + ": label out of range at byte offset " +
                           std::to_string(8 + i));
  }
  return labels;
}

void write_idx_images(const Eigen::MatrixXd& images, int rows, int cols,
                      const std::string& path) {
  if (rows < 1 || cols < 1 || images.cols() != static_cast<Eigen::Index>(rows) * cols)
    throw std::invalid_argument("write_idx_images: dimensions do not match the matrix");
  std::string payload;
  payload.reserve(16 + static_cast<std::size_t>(images.size()));
  append_be32(0x00000803u, payload);
  append_be32(static_cast<std::uint32_t>(images.rows()), payload);
  append_be32(static_cast<std::uint32_t>(rows), payload);
  append_be32(static_cast<std::uint32_t>(cols), payload);
  for (Eigen::Index i = 0; i < images.rows(); ++i)
    for (Eigen::Index p = 0; p < images.cols(); ++p) {
      const double v = images(i, p);
      if (!(v >= 0.0 && v <= 255.0))
        throw std::invalid_argument("write_idx_images: intensities must lie in [0, 255]");
      payload.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
    }
  write_all_bytes(payload, path);
}

void write_idx_labels(const std::vector<int>& labels, const std::string& path) {
  std::string payload;
  payload.reserve(8 + labels.size());
  append_be32(0x00000801u, payload);
  append_be32(static_cast<std::uint32_t>(labels.size()), payload);
  for (int y : labels) {
    if (y < 0 || y > 9) throw std::invalid_argument("write_idx_labels: digits are 0-9");
    payload.push_back(static_cast<char>(static_cast<unsigned char>(y)));
  }
  write_all_bytes(payload, path);
}

BinaryImageSet filter_digits(const Eigen::MatrixXd& images, const std::vector<int>& digits,
                             int zero_digit, int one_digit) {
  if (images.rows() != static_cast<Eigen::Index>(digits.size()))
    throw std::invalid_argument("filter_digits: image/label count mismatch");
  if (zero_digit == one_digit) throw std::invalid_argument("filter_digits: digits must differ");
  std::vector<int> keep;
  for (int i = 0; i < static_cast<int>(digits.size()); ++i)
    if (digits[i] == zero_digit || digits[i] == one_digit) keep.push_back(i);
  BinaryImageSet out;
  out.features.resize(keep.size(), images.cols());
  out.labels.resize(keep.size());
  for (int i = 0; i < static_cast<int>(keep.size()); ++i) {
    out.features.row(i) = images.row(keep[i]);
    out.labels[i] = digits[keep[i]] == one_digit ? 1 : 0;
  }
  return out;
}

Eigen::MatrixXd pca_project(const Eigen::MatrixXd& X, int dims) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (n < 2) throw std::invalid_argument("pca_project: need at least two rows");
  if (dims < 1 || dims > std::min(n, d))
    throw std::invalid_argument("pca_project: dims must lie in [1, min(rows, cols)]");
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw std::runtime_error("pca_project: eigensolver failed");
  Eigen::MatrixXd directions(d, dims);
  for (int j = 0; j < dims; ++j) {
    Eigen::VectorXd dir = es.eigenvectors().col(d - 1 - j);  // descending variance
    Eigen::Index peak = 0;
    dir.cwiseAbs().maxCoeff(&peak);
    if (dir[peak] < 0.0) dir = -dir;
    directions.col(j) = dir;
  }
  return centered * directions;
}

BinaryImageSet synthetic_clusters(int count, int dims, double separation,
                                  std::mt19937_64& rng) {
  if (count < 2 || dims < 1) throw std::invalid_argument("synthetic_clusters: bad shape");
  if (!(separation >= 0.0))
    throw std::invalid_argument("synthetic_clusters: separation must be nonnegative");
  const int ones = count / 2;
  std::normal_distribution<double> gauss(0.0, 1.0);
  BinaryImageSet out;
  out.features.resize(count, dims);
  out.labels.resize(count);
  for (int i = 0; i < count; ++i) {
    out.labels[i] = i >= count - ones ? 1 : 0;
    const double center = (out.labels[i] == 1 ? 0.5 : -0.5) * separation;
    for (int j = 0; j < dims; ++j)
      out.features(i, j) = (j == 0 ? center : 0.0) + gauss(rng);
  }
  return out;
}

Subsample stratified_subsample(const Eigen::MatrixXd& X, const std::vector<int>& y, int size,
                               std::mt19937_64& rng) {
  const int n = static_cast<int>(y.size());
  if (X.rows() != n) throw std::invalid_argument("stratified_subsample: row/label mismatch");
  if (size < 1 || size > n)
    throw std::invalid_argument("stratified_subsample: size must lie in [1, rows]");
  std::vector<int> zeros, ones;
  for (int i = 0; i < n; ++i) {
    if (y[i] != 0 && y[i] != 1)
      throw std::invalid_argument("stratified_subsample: labels must be 0/1");
    (y[i] == 1 ? ones : zeros).push_back(i);
  }
  int want_ones = static_cast<int>(
      std::lround(size * static_cast<double>(ones.size()) / static_cast<double>(n)));
  want_ones = std::clamp(want_ones, std::max(0, size - static_cast<int>(zeros.size())),
                         std::min(size, static_cast<int>(ones.size())));
  const int want_zeros = size - want_ones;

  std::vector<int> rows;
  rows.reserve(size);
  for (int i : choose_subset(static_cast<int>(ones.size()), want_ones, rng))
    rows.push_back(ones[i]);
  for (int i : choose_subset(static_cast<int>(zeros.size()), want_zeros, rng))
    rows.push_back(zeros[i]);
  std::sort(rows.begin(), rows.end());

  Subsample out;
  out.features.resize(size, X.cols());
  out.labels.resize(size);
  out.source_rows = rows;
  for (int i = 0; i < size; ++i) {
    out.features.row(i) = X.row(rows[i]);
    out.labels[i] = y[rows[i]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tracking scenes
// ---------------------------------------------------------------------------

namespace {

struct Disc {
  double cx, cy, r;
  bool contains(int col, int row) const {
    const double dx = col - cx, dy = row - cy;
    return dx * dx + dy * dy <= r * r;
  }
  void require_inside(int width, int height, const char* what) {
    if (cx - r < 0.0 || cx + r > width - 1 || cy - r < 0.0 || cy + r > height - 1)
      throw std::invalid_argument(std::string(what) + " disc does not fit inside the frame");
  }
};

}  // namespace

TrackingScene make_tracking_scene(const TrackingParams& params, std::mt19937_64& rng) {
  const int w = params.width, h = params.height, frames = params.frames;
  if (w < 1 || h < 1 || frames < 1)
    throw std::invalid_argument("tracking: dimensions must be positive");
  if (!(params.unobserved_frac >= 0.0 && params.unobserved_frac < 1.0))
    throw std::invalid_argument("tracking: unobserved fraction must lie in [0, 1)");
  const double radius = params.radius > 0.0 ? params.radius : 0.1 * std::min(w, h);
  if (!(radius > 0.0)) throw std::invalid_argument("tracking: degenerate radius");

  int corrupt = params.corrupt_frame;
  if (corrupt == -2) corrupt = frames / 2;
  if (corrupt < -1 || corrupt >= frames)
    throw std::invalid_argument("tracking: corrupt frame index out of range");

  const int n = w * h * frames;
  TrackingScene scene;
  scene.stack.width = w;
  scene.stack.height = h;
  scene.stack.frames = frames;
  scene.stack.state.assign(n, 0);
  scene.truth.assign(n, 0);

  // Object path: corner to corner, staying clear of the frame edge.
  const double span = frames > 1 ? frames - 1.0 : 1.0;
  for (int t = 0; t < frames; ++t) {
    Disc object{radius + (w - 1 - 2.0 * radius) * t / span,
                radius + (h - 1 - 2.0 * radius) * t / span, radius};
    object.require_inside(w, h, "object");
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col)
        if (object.contains(col, row)) scene.truth[grid3d_vertex(w, h, col, row, t)] = 1;
  }

  for (int v = 0; v < n; ++v)
    scene.stack.state[v] = static_cast<signed char>(scene.truth[v]);

  if (corrupt >= 0) {
    Disc spurious{params.spurious_col_frac * (w - 1), params.spurious_row_frac * (h - 1),
                  params.spurious_radius > 0.0 ? params.spurious_radius : 0.2 * radius};
    spurious.require_inside(w, h, "spurious");
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col)
        if (spurious.contains(col, row)) {
          const int v = grid3d_vertex(w, h, col, row, corrupt);
          scene.stack.state[v] = 1;
          if (scene.truth[v] == 0) scene.spurious_vertices.push_back(v);
        }
  }

  const int hide = static_cast<int>(std::lround(params.unobserved_frac * n));
  for (int v : choose_subset(n, hide, rng)) scene.stack.state[v] = -1;
  return scene;
}

LabelData stack_labels(const ImageStack& stack) {
  std::vector<std::pair<int, int>> observed;
  for (int v = 0; v < stack.size(); ++v)
    if (stack.state[v] >= 0) observed.emplace_back(v, stack.state[v]);
  return LabelData(stack.size(), observed);
}

void write_pgm(const Eigen::VectorXd& values, int width, int height,
               const std::string& path) {
  if (values.size() != static_cast<Eigen::Index>(width) * height)
    throw std::invalid_argument("write_pgm: value count does not match dimensions");
  std::string payload = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  payload.reserve(payload.size() + values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("write_pgm: values must lie in [0, 1]");
    payload.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
  }
  write_all_bytes(payload, path);
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

int default_basis_budget(int n, double gamma) {
  if (n < 1) throw std::invalid_argument("default_basis_budget: need n >= 1");
  if (gamma <= 0.0) return n;
  const double typical = std::ceil(1.0 / gamma);
  return static_cast<int>(std::min<double>(n, std::max(64.0, 4.0 * typical)));
}

DemoResult run_path_demo(const DemoConfig& config) {
  if (config.n < 2) throw std::invalid_argument("path-demo: need n >= 2");
  std::mt19937_64 data_rng(config.seed);
  McmcSettings mcmc = config.mcmc;
  mcmc.seed = data_rng();
  mcmc.on_exhaust = ExhaustPolicy::extend;

  const double gamma = effective_gamma(config.gamma, config.n);
  Hyperparams hyper = config.hyper;
  hyper.truncation_rate = gamma;

  StageTimer timer, overall;
  StageTimes times;
  Graph graph = build_path(config.n);
  times.add("graph", timer.lap());

  SpectralBasis basis =
      path_eigenpairs(config.n, resolve_budget(config.basis_budget, config.n, gamma));
  Eigen::VectorXd truth_field = path_ground_truth(config.n);
  times.add("eigenbasis", timer.lap());

  std::vector<int> labels = draw_labels(truth_field, data_rng);
  LabelData data = mask_labels(labels, config.observe_frac, data_rng);
  std::vector<int> hidden = hidden_vertices(data);

  Trace trace = run_chain(data, std::move(basis), hyper, mcmc);
  times.add("chain", timer.lap());

  PosteriorSummary summary = summarize(trace);
  const double heldout = hidden.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : accuracy(summary, labels, hidden);
  const double mean_k = mean_level(trace);
  times.add("total", overall.lap());
  return DemoResult{std::move(graph),  std::move(truth_field), std::move(labels),
                    std::move(hidden), std::move(trace),       std::move(summary),
                    heldout,           mean_k,                 std::move(times)};
}

DemoResult run_ws_demo(const DemoConfig& config) {
  std::mt19937_64 data_rng(config.seed);
  McmcSettings mcmc = config.mcmc;
  mcmc.seed = data_rng();
  mcmc.on_exhaust = ExhaustPolicy::reject;  // full basis below; nothing to extend

  StageTimer timer, overall;
  StageTimes times;
  Graph graph = config.graph_file.empty()
                    ? build_watts_strogatz(config.n, config.rewire_prob, data_rng)
                    : largest_connected_component(read_edge_list_file(config.graph_file)).graph;
  const int n = graph.num_vertices();
  if (n < 2) throw std::invalid_argument("ws-demo: graph too small");
  times.add("graph", timer.lap());

  const double gamma = effective_gamma(config.gamma, n);
  Hyperparams hyper = config.hyper;
  hyper.truncation_rate = gamma;

  // The reference field needs the whole spectrum, so the chain gets it too.
  const Eigen::SparseMatrix<double> L = laplacian(graph);
  SpectralBasis basis = partial_eigensolve(L, n);
  Eigen::VectorXd truth_field = series_ground_truth(basis);
  times.add("eigenbasis", timer.lap());

  std::vector<int> labels = draw_labels(truth_field, data_rng);
  LabelData data = mask_labels(labels, config.observe_frac, data_rng);
  std::vector<int> hidden = hidden_vertices(data);

  Trace trace = run_chain(data, std::move(basis), hyper, mcmc);
  times.add("chain", timer.lap());

  PosteriorSummary summary = summarize(trace);
  const double heldout = hidden.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : accuracy(summary, labels, hidden);
  const double mean_k = mean_level(trace);
  times.add("total", overall.lap());
  return DemoResult{std::move(graph),  std::move(truth_field), std::move(labels),
                    std::move(hidden), std::move(trace),       std::move(summary),
                    heldout,           mean_k,                 std::move(times)};
}

MnistResult run_mnist(const MnistConfig& config) {
  std::mt19937_64 data_rng(config.seed);
  McmcSettings mcmc = config.mcmc;
  mcmc.seed = data_rng();
  mcmc.on_exhaust = ExhaustPolicy::extend;

  StageTimer timer, overall;
  StageTimes times;
  BinaryImageSet train = filter_digits(load_idx_images(config.train_images),
                                       load_idx_labels(config.train_labels),
                                       config.digit_zero, config.digit_one);
  BinaryImageSet test = filter_digits(load_idx_images(config.test_images),
                                      load_idx_labels(config.test_labels),
                                      config.digit_zero, config.digit_one);
  if (config.train_subsample > 0) {
    Subsample sub =
        stratified_subsample(train.features, train.labels, config.train_subsample, data_rng);
    train.features = std::move(sub.features);
    train.labels = std::move(sub.labels);
  }
  if (config.test_subsample > 0) {
    Subsample sub =
        stratified_subsample(test.features, test.labels, config.test_subsample, data_rng);
    test.features = std::move(sub.features);
    test.labels = std::move(sub.labels);
  }
  const int num_train = static_cast<int>(train.labels.size());
  const int num_test = static_cast<int>(test.labels.size());
  const int n = num_train + num_test;
  if (num_train < 1 || num_test < 1)
    throw std::invalid_argument("mnist: need both train and test images of the two digits");

  Eigen::MatrixXd features(n, train.features.cols());
  if (test.features.cols() != train.features.cols())
    throw std::invalid_argument("mnist: train and test image sizes differ");
  features.topRows(num_train) = train.features;
  features.bottomRows(num_test) = test.features;
  std::vector<int> labels = train.labels;
  labels.insert(labels.end(), test.labels.begin(), test.labels.end());
  times.add("load", timer.lap());

  const Eigen::MatrixXd projected = pca_project(features, config.pca_dims);
  times.add("pca", timer.lap());
  Graph graph = build_knn_graph(projected, config.knn);
  const Eigen::SparseMatrix<double> L = laplacian(graph);
  times.add("graph", timer.lap());

  const double gamma = effective_gamma(config.gamma, n);
  Hyperparams hyper = config.hyper;
  hyper.truncation_rate = gamma;
  SpectralBasis basis =
      partial_eigensolve(L, resolve_budget(config.basis_budget, n, gamma));
  times.add("eigenbasis", timer.lap());

  std::vector<std::pair<int, int>> observed;
  observed.reserve(num_train);
  for (int i = 0; i < num_train; ++i) observed.emplace_back(i, labels[i]);
  LabelData data(n, observed);

  Trace trace = run_chain(data, std::move(basis), hyper, mcmc, &L);
  times.add("chain", timer.lap());

  PosteriorSummary summary = summarize(trace);
  std::vector<int> eval(num_test);
  std::iota(eval.begin(), eval.end(), num_train);
  const double acc = accuracy(summary, labels, eval);
  times.add("total", overall.lap());
  return MnistResult{n,   num_train,          num_test, std::move(trace), std::move(summary),
                     acc, std::move(times)};
}

TrackingResult run_tracking(const TrackingConfig& config) {
  std::mt19937_64 data_rng(config.seed);
  McmcSettings mcmc = config.mcmc;
  mcmc.seed = data_rng();
  mcmc.on_exhaust = ExhaustPolicy::extend;

  StageTimer timer, overall;
  StageTimes times;
  TrackingScene scene = make_tracking_scene(config.scene, data_rng);
  const int w = scene.stack.width, h = scene.stack.height, frames = scene.stack.frames;
  const int n = scene.stack.size();
  LabelData data = stack_labels(scene.stack);
  times.add("scene", timer.lap());

  const double gamma = effective_gamma(config.gamma, n);
  Hyperparams hyper = config.hyper;
  hyper.truncation_rate = gamma;
  SpectralBasis basis =
      grid3d_eigenpairs(w, h, frames, resolve_budget(config.basis_budget, n, gamma));
  times.add("eigenbasis", timer.lap());

  Trace trace = run_chain(data, std::move(basis), hyper, mcmc);
  times.add("chain", timer.lap());
  PosteriorSummary summary = summarize(trace);

  std::int64_t inter = 0, uni = 0;
  for (int v = 0; v < n; ++v) {
    const bool predicted = summary.hard_label[v] == 1, actual = scene.truth[v] == 1;
    inter += predicted && actual ? 1 : 0;
    uni += predicted || actual ? 1 : 0;
  }
  const double iou = uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;

  bool suppressed = true;
  for (int v : scene.spurious_vertices) suppressed = suppressed && summary.hard_label[v] == 0;

  // Boundary: pixels with an opposite-truth 4-neighbour in the same frame.
  double boundary_sum = 0.0, other_sum = 0.0;
  std::int64_t boundary_count = 0, other_count = 0;
  for (int t = 0; t < frames; ++t)
    for (int row = 0; row < h; ++row)
      for (int col = 0; col < w; ++col) {
        const int v = grid3d_vertex(w, h, col, row, t);
        bool boundary = false;
        const int dc[] = {1, -1, 0, 0}, dr[] = {0, 0, 1, -1};
        for (int j = 0; j < 4 && !boundary; ++j) {
          const int c2 = col + dc[j], r2 = row + dr[j];
          if (c2 < 0 || c2 >= w || r2 < 0 || r2 >= h) continue;
          boundary = scene.truth[grid3d_vertex(w, h, c2, r2, t)] != scene.truth[v];
        }
        const double width = summary.upper[v] - summary.lower[v];
        (boundary ? boundary_sum : other_sum) += width;
        ++(boundary ? boundary_count : other_count);
      }
  const double boundary_width = boundary_count > 0 ? boundary_sum / boundary_count : 0.0;
  const double other_width = other_count > 0 ? other_sum / other_count : 0.0;

  times.add("total", overall.lap());
  return TrackingResult{std::move(scene), std::move(trace), std::move(summary), iou,
                        suppressed,       boundary_width,   other_width,        std::move(times)};
}

std::vector<BenchRow> bench_scaling(const BenchConfig& config) {
  if (config.sizes.empty()) throw std::invalid_argument("bench: no sizes given");
  for (std::size_t i = 0; i + 1 < config.sizes.size(); ++i)
    if (config.sizes[i] >= config.sizes[i + 1])
      throw std::invalid_argument("bench: sizes must be strictly ascending");
  if (config.sizes.front() <= config.knn)
    throw std::invalid_argument("bench: smallest size must exceed the neighbour count");
  if (!(config.test_frac > 0.0 && config.test_frac < 1.0))
    throw std::invalid_argument("bench: test fraction must lie in (0, 1)");
  if (config.seeds < 1) throw std::invalid_argument("bench: need at least one repetition");

  std::mt19937_64 master(config.seed);
  BinaryImageSet pool;
  if (!config.train_images.empty()) {
    pool = filter_digits(load_idx_images(config.train_images),
                         load_idx_labels(config.train_labels), config.digit_zero,
                         config.digit_one);
    if (!config.test_images.empty()) {
      BinaryImageSet extra = filter_digits(load_idx_images(config.test_images),
                                           load_idx_labels(config.test_labels),
                                           config.digit_zero, config.digit_one);
      const Eigen::Index before = pool.features.rows();
      pool.features.conservativeResize(before + extra.features.rows(), Eigen::NoChange);
      pool.features.bottomRows(extra.features.rows()) = extra.features;
      pool.labels.insert(pool.labels.end(), extra.labels.begin(), extra.labels.end());
    }
    pool.features = pca_project(pool.features, config.pca_dims);
  } else {
    const int count = static_cast<int>(std::ceil(1.25 * config.sizes.back()));
    pool = synthetic_clusters(count, config.synthetic_dims, config.synthetic_separation,
                              master);
  }
  if (static_cast<int>(pool.labels.size()) < config.sizes.back())
    throw std::invalid_argument("bench: pool smaller than the largest size");

  std::vector<BenchRow> rows;
  for (int rep = 0; rep < config.seeds; ++rep) {
    const std::uint64_t rep_seed = master();
    std::mt19937_64 rep_rng(rep_seed);
    for (int size : config.sizes) {
      Subsample sub = stratified_subsample(pool.features, pool.labels, size, rep_rng);
      Graph graph = build_knn_graph(sub.features, config.knn);
      const Eigen::SparseMatrix<double> L = laplacian(graph);
      LabelData data = mask_labels(sub.labels, 1.0 - config.test_frac, rep_rng);
      const std::vector<int> hidden = hidden_vertices(data);

      Hyperparams hyper = config.hyper;
      hyper.truncation_rate = config.gamma < 0.0 ? 20.0 / size : config.gamma;
      McmcSettings mcmc = config.mcmc;

      {
        StageTimer timer;
        mcmc.seed = rep_rng();
        mcmc.on_exhaust = ExhaustPolicy::extend;
        SpectralBasis basis = partial_eigensolve(
            L, resolve_budget(config.basis_budget, size, hyper.truncation_rate));
        Trace trace = run_chain(data, std::move(basis), hyper, mcmc, &L);
        const double seconds = timer.lap();
        const double acc = accuracy(summarize(trace), sub.labels, hidden);
        rows.push_back(BenchRow{size, "truncated", seconds, acc, rep_seed});
      }
      {
        StageTimer timer;
        mcmc.seed = rep_rng();
        SpectralBasis basis = partial_eigensolve(L, size);
        Trace trace = run_full_baseline(data, basis, hyper, mcmc);
        const double seconds = timer.lap();
        const double acc = accuracy(summarize(trace), sub.labels, hidden);
        rows.push_back(BenchRow{size, "full", seconds, acc, rep_seed});
      }
    }
  }
  return rows;
}

void write_timing_csv(const StageTimes& times, std::ostream& out) {
  out << "stage,seconds\n";
  char buf[32];
  for (const auto& [stage, seconds] : times.seconds) {
    std::snprintf(buf, sizeof(buf), "%.6f", seconds);
    out << stage << ',' << buf << '\n';
  }
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << "size,method,seconds,accuracy\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", row.seconds, row.accuracy);
    out << row.size << ',' << row.method << ',' << buf << '\n';
  }
}

}  // namespace speclabel
