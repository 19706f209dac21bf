#include "slitscan/reconstruct.hpp"

#include "slitscan/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace slitscan {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Mat to_eigen(const ApertureMatrix& a) {
  Mat m = Mat::Zero(static_cast<Eigen::Index>(a.n), static_cast<Eigen::Index>(a.n));
  for (std::size_t i = 0; i < a.n; ++i) {
    const std::size_t lo = i + 1 > a.band_left ? i + 1 - a.band_left : 0;
    const std::size_t hi = std::min(a.n - 1, i + a.band_right);
    for (std::size_t j = lo; j <= hi; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  }
  return m;
}

} // namespace

double ApertureMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= n || j >= n)
    return 0.0;
  return (j + band_left > i && j <= i + band_right) ? 1.0 : 0.0;
}

std::vector<double> ApertureMatrix::dense() const {
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = at(i, j);
  return out;
}

std::vector<double> ApertureMatrix::multiply(std::span<const double> p) const {
  if (p.size() != n)
    throw ConfigError("ApertureMatrix::multiply: vector length does not match the matrix");
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i + 1 > band_left ? i + 1 - band_left : 0;
    const std::size_t hi = std::min(n - 1, i + band_right);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j)
      s += p[j];
    out[i] = s;
  }
  return out;
}

ApertureMatrix build_aperture_matrix(std::size_t n, std::size_t w, Opening opening,
                                     std::size_t ref) {
  if (w == 0 || w > n) {
    std::ostringstream msg;
    msg << "build_aperture_matrix: aperture of " << w << " elements does not fit n = " << n;
    throw ConfigError(msg.str());
  }
  ApertureMatrix a{n, 0, 0};
  switch (opening) {
  case Opening::rightward:
    a.band_left = std::min(ref, (w + 1) / 2);
    a.band_right = w - a.band_left;
    break;
  case Opening::leftward:
    a.band_right = std::min(ref, w / 2);
    a.band_left = w - a.band_right;
    break;
  case Opening::centered:
    a.band_left = (w + 1) / 2;
    a.band_right = w / 2;
    break;
  }
  return a;
}

std::size_t rank_of(const ApertureMatrix& matrix, double rel_tol) {
  const Mat m = to_eigen(matrix);
  Eigen::BDCSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0)
    return 0;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0))
      ++r;
  return r;
}

std::vector<std::size_t> full_rank_dims(std::size_t w, std::size_t n_max, Opening opening,
                                        std::size_t ref) {
  if (w == 0 || n_max < w)
    throw ConfigError("full_rank_dims: need 0 < w <= n_max");
  std::vector<std::size_t> dims;
  for (std::size_t n = w; n <= n_max; ++n)
    if (rank_of(build_aperture_matrix(n, w, opening, ref)) == n)
      dims.push_back(n);
  return dims;
}

ReconstructionResult solve_stacked(std::span<const ApertureMatrix> matrices,
                                   std::span<const std::vector<double>> fluxes,
                                   std::span<const double> exposures,
                                   const SolveOptions& options) {
  if (matrices.empty())
    throw ConfigError("solve_stacked: no scans given");
  if (fluxes.size() != matrices.size() || exposures.size() != matrices.size())
    throw ConfigError("solve_stacked: need one flux vector and one exposure per matrix");
  if (!(options.cutoff >= 0.0 && options.cutoff < 1.0))
    throw ConfigError("solve_stacked: cutoff must lie in [0, 1)");

  const std::size_t n = matrices.front().n;
  std::size_t rows = 0;
  bool any_flux = false;
  for (std::size_t s = 0; s < matrices.size(); ++s) {
    if (matrices[s].n != n)
      throw ConfigError("solve_stacked: matrices do not share the pattern length");
    if (fluxes[s].size() != matrices[s].n) {
      std::ostringstream msg;
      msg << "solve_stacked: scan " << s << " has " << fluxes[s].size()
          << " flux values for a matrix with " << matrices[s].n << " rows";
      throw ConfigError(msg.str());
    }
    if (!(exposures[s] > 0.0))
      throw ConfigError("solve_stacked: exposures must be positive");
    for (const double f : fluxes[s]) {
      if (!std::isfinite(f))
        throw DataError("solve_stacked: flux values must be finite");
      any_flux = any_flux || f != 0.0;
    }
    rows += matrices[s].n;
  }
  if (!any_flux)
    throw DataError("solve_stacked: all flux values are zero, nothing to reconstruct");

  const auto ni = static_cast<Eigen::Index>(n);
  Mat a(static_cast<Eigen::Index>(rows), ni);
  Eigen::VectorXd f(static_cast<Eigen::Index>(rows));
  Eigen::Index r0 = 0;
  for (std::size_t s = 0; s < matrices.size(); ++s) {
    a.middleRows(r0, ni) = to_eigen(matrices[s]);
    for (std::size_t i = 0; i < n; ++i)
      f(r0 + static_cast<Eigen::Index>(i)) = fluxes[s][i] / exposures[s];
    r0 += ni;
  }

  // Truncated SVD of R from A = QR: same singular values and right vectors.
  const Eigen::HouseholderQR<Mat> qr(a);
  const Mat rr = qr.matrixQR().topRows(ni).triangularView<Eigen::Upper>();
  const Eigen::VectorXd qtf = (qr.householderQ().transpose() * f).head(ni);
  Eigen::BDCSVD<Mat> svd(rr, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(options.cutoff);
  Eigen::VectorXd p = svd.solve(qtf);
  const double residual = (a * p - f).norm();
  if (options.clamp_nonnegative)
    p = p.cwiseMax(0.0);

  ReconstructionResult out;
  out.p_hat.assign(p.data(), p.data() + p.size());
  out.positions.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    out.positions[k] = options.origin_m + static_cast<double>(k) * options.pitch_m;
  out.pitch_m = options.pitch_m;
  out.residual_norm = residual;
  out.effective_rank = static_cast<std::size_t>(svd.rank());
  out.stacked_rows = rows;
  out.cutoff = options.cutoff;
  return out;
}

ReconstructionResult gaussian_smooth(const ReconstructionResult& result, double rms_m) {
  if (!(rms_m >= 0.0))
    throw ConfigError("gaussian_smooth: rms must be non-negative");
  ReconstructionResult out = result;
  if (rms_m == 0.0)
    return out;
  if (!(result.pitch_m > 0.0))
    throw ConfigError("gaussian_smooth: result has no grid pitch");

  const double sigma = rms_m / result.pitch_m;
  const auto radius = static_cast<std::ptrdiff_t>(std::floor(5.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double t = static_cast<double>(k) / sigma;
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * t * t);
    sum += kernel[static_cast<std::size_t>(k + radius)];
  }
  for (double& v : kernel)
    v /= sum;

  const auto n = static_cast<std::ptrdiff_t>(result.p_hat.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      const std::ptrdiff_t j = i - k;
      if (j >= 0 && j < n)
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               result.p_hat[static_cast<std::size_t>(j)];
    }
    out.p_hat[static_cast<std::size_t>(i)] = acc;
  }
  out.smoothing_rms_m = rms_m;
  return out;
}

std::size_t aperture_elements(const ScanConfig& scan) {
  scan.validate();
  const double w = std::round(scan.aperture_width_m / scan.step_m);
  if (w < 1.0)
    throw ConfigError("aperture_elements: aperture narrower than one scan step");
  return static_cast<std::size_t>(w);
}

double pattern_origin(const ScanConfig& scan, const ApertureMatrix& matrix) {
  const double c0 = -scan.slit_position(scan.n_steps - 1);
  const double a = static_cast<double>(matrix.width()) * scan.step_m;
  const double e_lo = aperture_interval(0.0, a, scan.opening, scan.reference_half_width_m).first;
  return c0 + e_lo + (static_cast<double>(matrix.band_left) - 0.5) * scan.step_m;
}

} // namespace slitscan
