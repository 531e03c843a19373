// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "cloformer/error.hpp"
#include "cloformer/ops.hpp"

namespace clo {

namespace {

using Complex = std::complex<double>;

std::vector<Complex> twiddles(std::size_t n) {
  std::vector<Complex> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = -2.0 * std::numbers::pi * double(k) / double(n);
    w[k] = {std::cos(angle), std::sin(angle)};
  }
  return w;
}

// In-place direct DFT of `count` sequences of length n spaced `stride`
// apart, each element `step` apart.
void dft_axis(std::vector<Complex>& data, std::size_t n, std::size_t step, std::size_t count,
              std::size_t stride, const std::vector<Complex>& w) {
  std::vector<Complex> line(n);
  for (std::size_t c = 0; c < count; ++c) {
    Complex* base = data.data() + c * stride;
    for (std::size_t k = 0; k < n; ++k) {
      Complex acc = 0;
      for (std::size_t j = 0; j < n; ++j) acc += base[j * step] * w[(j * k) % n];
      line[k] = acc;
    }
    for (std::size_t k = 0; k < n; ++k) base[k * step] = line[k];
  }
}

}  // namespace

template <typename T>
SpectrumReport feature_spectrum(const BasicTensor<T>& f) {
  const Shape& s = f.shape();
  const std::size_t h = s.h();
  const std::size_t w = s.w();
  if (h < 2 || w < 2) throw DimensionError("feature_spectrum: map " + s.str() + " smaller than 2x2");
  if (!all_finite(f)) throw NumericError("feature_spectrum: non-finite input");
  const std::size_t plane = h * w;
  const std::size_t maps = s.n() * s.c();
  const auto wh = twiddles(h);
  const auto ww = twiddles(w);
  std::vector<double> mag(plane, 0.0);
  std::vector<double> power(plane, 0.0);
  std::vector<Complex> buf(plane);
  const auto values = f.data();
  for (std::size_t m = 0; m < maps; ++m) {
    const T* src = values.data() + m * plane;
    double mean = 0;
    for (std::size_t i = 0; i < plane; ++i) mean += src[i];
    mean /= double(plane);
    for (std::size_t i = 0; i < plane; ++i) buf[i] = double(src[i]) - mean;
    dft_axis(buf, w, 1, h, w, ww);
    dft_axis(buf, h, w, w, 1, wh);
    for (std::size_t i = 0; i < plane; ++i) {
      mag[i] += std::abs(buf[i]);
      power[i] += std::norm(buf[i]);
    }
  }
  SpectrumReport r;
  r.height = h;
  r.width = w;
  r.log_mag.assign(plane, 0.0);
  r.power.assign(plane, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t src = y * w + x;
      const std::size_t dst = ((y + h / 2) % h) * w + (x + w / 2) % w;
      r.log_mag[dst] = std::log1p(mag[src] / double(maps));
      r.power[dst] = power[src] / double(maps);
    }
  }
  const std::size_t bands = std::min(kDefaultBands, std::min(h, w) / 2);
  if (bands >= 2) r.bands = band_energy(r, bands);
  return r;
}

std::vector<double> band_energy(const SpectrumReport& r, std::size_t n_bands) {
  const std::size_t limit = std::min(r.height, r.width) / 2;
  if (n_bands < 2) throw ArgumentError("band_energy: need at least 2 bands");
  if (n_bands > limit) {
    throw ArgumentError("band_energy: " + std::to_string(n_bands) + " bands exceed min(H,W)/2 = " +
                        std::to_string(limit));
  }
  if (r.power.size() != r.height * r.width) throw ArgumentError("band_energy: empty spectrum");
  std::vector<double> bands(n_bands, 0.0);
  const double ny = double(r.height) / 2.0;
  const double nx = double(r.width) / 2.0;
  for (std::size_t y = 0; y < r.height; ++y) {
    for (std::size_t x = 0; x < r.width; ++x) {
      const double fy = (double(y) - double(r.height / 2)) / ny;
      const double fx = (double(x) - double(r.width / 2)) / nx;
      const double radius = std::sqrt(fy * fy + fx * fx);
      const auto band = std::min(n_bands - 1, static_cast<std::size_t>(radius * double(n_bands)));
      bands[band] += r.power[y * r.width + x];
    }
  }
  double total = 0;
  for (double b : bands) total += b;
  if (total <= 0.0) {
    std::fill(bands.begin(), bands.end(), 0.0);
    bands[0] = 1.0;
    return bands;
  }
  for (double& b : bands) b /= total;
  return bands;
}

double high_band_mass(const std::vector<double>& bands) {
  double mass = 0;
  for (std::size_t i = bands.size() / 2; i < bands.size(); ++i) mass += bands[i];
  return mass;
}

template <typename T>
std::vector<SpectrumReport> branch_spectra(const BasicModel<T>& m, const BasicTensor<T>& x,
                                           int stage, std::size_t n_bands) {
  if (stage != 2 && stage != 3) {
    throw ArgumentError("branch_spectra: stage must be 2 or 3, got " + std::to_string(stage));
  }
  NoGradGuard no_grad;
  ForwardOptions options;
  options.tap_stage = stage;
  const ForwardResult<T> result = model_forward(x, m, options);
  const std::string prefix = "stage" + std::to_string(stage) + ".";
  const std::pair<const BasicTensor<T>*, const char*> taps[] = {
      {&result.taps.shared, "shared"},
      {&result.taps.local, "attnconv"},
      {&result.taps.global, "global"},
  };
  std::vector<SpectrumReport> reports;
  for (const auto& [tensor, name] : taps) {
    if (!tensor->defined()) {
      throw ConfigurationError("branch_spectra: model has no " + std::string(name) + " tap");
    }
    SpectrumReport r = feature_spectrum(*tensor);
    r.bands = band_energy(r, n_bands);
    r.source = prefix + name;
    reports.push_back(std::move(r));
  }
  return reports;
}

std::string to_pgm(const SpectrumReport& r) {
  std::ostringstream out;
  out << "P5\n" << r.width << ' ' << r.height << "\n255\n";
  const double peak = r.log_mag.empty() ? 0.0 : *std::max_element(r.log_mag.begin(), r.log_mag.end());
  for (double v : r.log_mag) {
    const double scaled = peak > 0 ? 255.0 * v / peak : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(scaled, 0.0, 255.0)))));
  }
  return out.str();
}

std::string bands_csv(const std::vector<double>& bands) {
  std::ostringstream out;
  out.precision(10);
  out << "band_index,energy\n";
  for (std::size_t i = 0; i < bands.size(); ++i) out << i << ',' << bands[i] << '\n';
  return out.str();
}

template SpectrumReport feature_spectrum(const BasicTensor<float>&);
template SpectrumReport feature_spectrum(const BasicTensor<double>&);
template std::vector<SpectrumReport> branch_spectra(const BasicModel<float>&,
                                                    const BasicTensor<float>&, int, std::size_t);
template std::vector<SpectrumReport> branch_spectra(const BasicModel<double>&,
                                                    const BasicTensor<double>&, int, std::size_t);

}  // namespace clo
