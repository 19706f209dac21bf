#pragma once

#include "slitscan/instrument.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace slitscan {

/// 0/1 band matrix of one scan: row i (flux at the i-th aperture offset)
/// sums pattern elements j with i - band_left < j <= i + band_right, clipped
/// to the matrix. Rows and columns are both indexed by increasing offset.
struct ApertureMatrix {
  std::size_t n = 0;
  std::size_t band_left = 0;
  std::size_t band_right = 0;

  std::size_t width() const { return band_left + band_right; }
  double at(std::size_t i, std::size_t j) const;
  std::vector<double> dense() const; ///< row-major n x n
  std::vector<double> multiply(std::span<const double> p) const;
};

/// Band split for an aperture of `w` elements.
///   rightward: band_left = min(ref, ceil(w/2)), band_right = w - band_left
///   leftward:  band_right = min(ref, floor(w/2)), band_left = w - band_right
///   centered:  band_left = ceil(w/2), band_right = floor(w/2)
/// Each reduces to the identity for w = 1.
ApertureMatrix build_aperture_matrix(std::size_t n, std::size_t width_elems,
                                     Opening opening = Opening::rightward,
                                     std::size_t reference_elems = 20);

/// Number of singular values above rel_tol * sigma_max.
std::size_t rank_of(const ApertureMatrix& matrix, double rel_tol = 1e-10);

/// Every n in [w, n_max] for which the n x n matrix has full rank.
std::vector<std::size_t> full_rank_dims(std::size_t width_elems, std::size_t n_max,
                                        Opening opening = Opening::rightward,
                                        std::size_t reference_elems = 20);

struct SolveOptions {
  double cutoff = 1e-10;
  bool clamp_nonnegative = false;
  /// Position of pattern element 0 and element pitch, for the result grid.
  double origin_m = 0.0;
  double pitch_m = 1.0;
};

struct ReconstructionResult {
  std::vector<double> positions; ///< m
  std::vector<double> p_hat;
  double pitch_m = 0.0;
  double residual_norm = 0.0;
  std::size_t effective_rank = 0;
  std::size_t stacked_rows = 0;
  double cutoff = 0.0;
  double smoothing_rms_m = 0.0;

  bool rank_deficient() const { return effective_rank < p_hat.size(); }
};

/// Minimum-norm least-squares estimate of the pattern from several scans.
/// Each flux vector (ordered like the matrix rows) is divided by its
/// exposure, the systems are stacked, and the SVD pseudoinverse with the
/// relative cutoff is applied.
///
/// Throws ConfigError on inconsistent dimensions or non-positive exposures,
/// DataError when every flux is zero.
ReconstructionResult solve_stacked(std::span<const ApertureMatrix> matrices,
                                   std::span<const std::vector<double>> fluxes,
                                   std::span<const double> exposures,
                                   const SolveOptions& options = {});

/// Gaussian convolution with standard deviation `rms_m`, kernel truncated at
/// five standard deviations and renormalised; samples beyond the ends count
/// as zero.
ReconstructionResult gaussian_smooth(const ReconstructionResult& result, double rms_m);

/// Number of scan steps covered by the aperture width, round(a / step).
std::size_t aperture_elements(const ScanConfig& scan);

/// Pupil coordinate of pattern element 0: the matrix column grid of `scan`
/// mapped back through the aperture geometry. Element k sits at
/// origin + k * step.
double pattern_origin(const ScanConfig& scan, const ApertureMatrix& matrix);

} // namespace slitscan
