#include "dimsel/pca.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <fstream>

#include "dimsel/error.hpp"
#include "dimsel/kernels.hpp"

namespace dimsel {

namespace {

void check_range(const PcaModel& model, int d, const char* op) {
  if (d < 1 || d > model.dim())
    throw Error(std::string(op) + ": d must be in [1, " +
                std::to_string(model.dim()) + "], got " + std::to_string(d));
}

}  // namespace

PcaModel fit_pca(const MatrixF& embedding, PcaMode mode, int threads) {
  const std::size_t rows = embedding.rows();
  const std::size_t cols = embedding.cols();
  if (rows <= cols)
    throw Error("fit_pca: need more rows than columns (got " +
                std::to_string(rows) + "x" + std::to_string(cols) + ")");
  if (!embedding.all_finite()) throw Error("fit_pca: non-finite input");

  PcaModel model;
  model.mode = mode;

  // Work in double; float inputs are nowhere near the invariant tolerances.
  MatrixD centered(rows, cols);
  if (mode == PcaMode::kCentered) {
    model.mean.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        model.mean[c] += static_cast<double>(embedding(r, c));
    for (double& m : model.mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        centered(r, c) = static_cast<double>(embedding(r, c)) - model.mean[c];
  } else {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        centered(r, c) = static_cast<double>(embedding(r, c));
  }

  MatrixD gram(cols, cols);
  kernels::gram(centered.data(), rows, cols, gram.data(), threads);

  Eigen::MatrixXd g = Eigen::Map<const Eigen::Matrix<
      double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      gram.data(), static_cast<Eigen::Index>(cols),
      static_cast<Eigen::Index>(cols));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
  if (solver.info() != Eigen::Success)
    throw Error("fit_pca: eigensolver did not converge");

  // Eigen returns ascending eigenvalues; we want descending variance.
  model.basis = MatrixD(cols, cols);
  model.explained_variance.resize(cols);
  for (std::size_t k = 0; k < cols; ++k) {
    const auto src = static_cast<Eigen::Index>(cols - 1 - k);
    const double lambda = std::max(solver.eigenvalues()(src), 0.0);
    model.explained_variance[k] = lambda / static_cast<double>(rows - 1);
    for (std::size_t j = 0; j < cols; ++j)
      model.basis(j, k) = solver.eigenvectors()(static_cast<Eigen::Index>(j),
                                                src);
  }

  // Sign convention: largest-magnitude entry of each column positive,
  // lowest index winning ties.
  for (std::size_t k = 0; k < cols; ++k) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double mag = std::abs(model.basis(j, k));
      if (mag > best) {
        best = mag;
        arg = j;
      }
    }
    if (model.basis(arg, k) < 0.0)
      for (std::size_t j = 0; j < cols; ++j) model.basis(j, k) = -model.basis(j, k);
  }

  model.coefficients = MatrixD(rows, cols);
  kernels::matmul(centered.data(), rows, cols, cols, model.basis.data(), cols,
                  cols, model.coefficients.data(), cols, threads);
  return model;
}

TruncatedEmbedding truncate(const PcaModel& model, int d) {
  check_range(model, d, "truncate");
  TruncatedEmbedding out;
  out.d = d;
  out.values = MatrixD(model.vocab_rows(), d);
  for (std::size_t r = 0; r < model.vocab_rows(); ++r)
    std::memcpy(out.values.row(r).data(), model.coefficients.row(r).data(),
                static_cast<std::size_t>(d) * sizeof(double));
  return out;
}

MatrixD reconstruct(const PcaModel& model, int d, int threads) {
  check_range(model, d, "reconstruct");
  const std::size_t rows = model.vocab_rows();
  const auto cols = static_cast<std::size_t>(model.dim());

  // Row k of basis^T is direction u_k.
  MatrixD basis_t(cols, cols);
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < cols; ++j) basis_t(i, j) = model.basis(j, i);

  MatrixD out(rows, cols);
  kernels::matmul(model.coefficients.data(), rows, static_cast<std::size_t>(d),
                  cols, basis_t.data(), cols, cols, out.data(), cols, threads);
  if (model.mode == PcaMode::kCentered)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out(r, c) += model.mean[c];
  return out;
}

VarianceReport explained_variance_report(const PcaModel& model) {
  const auto& ev = model.explained_variance;
  if (ev.empty()) throw Error("explained_variance_report: unfitted model");
  double total = 0.0;
  for (double v : ev) total += v;
  if (total <= 0.0)
    throw Error("explained_variance_report: degenerate model (zero variance)");

  VarianceReport report;
  report.ratios.reserve(ev.size());
  for (double v : ev) report.ratios.push_back(v / total);
  if (ev.back() <= 0.0) {
    report.spread_infinite = true;
    report.spread = std::numeric_limits<double>::infinity();
  } else {
    report.spread = ev.front() / ev.back();
  }
  return report;
}

std::vector<double> coefficient_mean_profile(const PcaModel& model) {
  const std::size_t rows = model.vocab_rows();
  const auto cols = static_cast<std::size_t>(model.dim());
  std::vector<double> profile(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = model.coefficients.row(r);
    for (std::size_t c = 0; c < cols; ++c) profile[c] += std::abs(row[c]);
  }
  for (double& p : profile) p /= static_cast<double>(rows);
  return profile;
}

namespace {

constexpr char kMagic[] = "DIMSELPCA1\n";

void write_doubles(std::ofstream& out, const double* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p),
            static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* p, std::size_t n) {
  in.read(reinterpret_cast<char*>(p),
          static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_pca: cannot open " + path.string());
  out.write(kMagic, sizeof(kMagic) - 1);
  const std::uint8_t mode = model.mode == PcaMode::kCentered ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&mode), 1);
  const std::uint64_t rows = model.vocab_rows();
  const std::uint64_t cols = static_cast<std::uint64_t>(model.dim());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  write_doubles(out, model.explained_variance.data(), cols);
  if (mode) write_doubles(out, model.mean.data(), cols);
  write_doubles(out, model.basis.data(), cols * cols);
  write_doubles(out, model.coefficients.data(), rows * cols);
  if (!out) throw Error("save_pca: write failed for " + path.string());
}

PcaModel load_pca(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_pca: cannot open " + path.string());
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw Error("load_pca: not a PCA model file: " + path.string());
  std::uint8_t mode = 0;
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&mode), 1);
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || rows <= cols || cols == 0)
    throw Error("load_pca: corrupt header in " + path.string());

  PcaModel model;
  model.mode = mode ? PcaMode::kCentered : PcaMode::kUncentered;
  model.explained_variance.resize(cols);
  read_doubles(in, model.explained_variance.data(), cols);
  if (mode) {
    model.mean.resize(cols);
    read_doubles(in, model.mean.data(), cols);
  }
  model.basis = MatrixD(cols, cols);
  read_doubles(in, model.basis.data(), cols * cols);
  model.coefficients = MatrixD(rows, cols);
  read_doubles(in, model.coefficients.data(), rows * cols);
  if (!in) throw Error("load_pca: truncated file " + path.string());
  return model;
}

}  // namespace dimsel
