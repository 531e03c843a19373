// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cloformer/model.hpp"

namespace clo {

/// Centered spectra of a feature map. Index (i, j) of the row-major planes
/// holds frequency (i - H/2, j - W/2) (integer division).
struct SpectrumReport {
  std::size_t height = 0;
  std::size_t width = 0;
  /// log(1 + mean |F|) over batch and channels.
  std::vector<double> log_mag;
  /// mean |F|^2 over batch and channels.
  std::vector<double> power;
  /// Radial band energies at the default band count (empty when the map is
  /// too small to host two bands).
  std::vector<double> bands;
  std::string source;
};

inline constexpr std::size_t kDefaultBands = 8;

/// Per channel: subtract the spatial mean, 2-D DFT, magnitude. Averages over
/// batch and channels.
template <typename T>
SpectrumReport feature_spectrum(const BasicTensor<T>& f);

/// Splits the plane into B annuli of equal width in Nyquist-normalized
/// radius (the corners fold into the outermost band) and returns the
/// normalized power per annulus. A spectrum without energy puts all mass
/// in band 0. Requires 2 <= B <= min(H, W) / 2.
std::vector<double> band_energy(const SpectrumReport& r, std::size_t n_bands);

/// Fraction of band mass in the upper half of the bands.
double high_band_mass(const std::vector<double>& bands);

/// Spectra of the final block of stage 2 or 3: shared-weight output
/// (dw_v), full local-branch output and global-branch output, in that order.
template <typename T>
std::vector<SpectrumReport> branch_spectra(const BasicModel<T>& m, const BasicTensor<T>& x,
                                           int stage, std::size_t n_bands = kDefaultBands);

/// 8-bit binary PGM of log_mag scaled so its maximum maps to 255.
std::string to_pgm(const SpectrumReport& r);

/// `band_index,energy` rows under a header line.
std::string bands_csv(const std::vector<double>& bands);

}  // namespace clo
