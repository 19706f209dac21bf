#pragma once

#include "slitscan/field.hpp"

#include <span>

namespace slitscan::detail {

enum class FftSign { forward = -1, backward = +1 };

/// Unnormalised in-place DFT: X_m = sum_k x_k exp(sign * 2 pi i k m / n).
/// Plans are cached per (n, sign); execution is thread-safe.
void fft_inplace(std::span<Complex> data, FftSign sign);

} // namespace slitscan::detail
