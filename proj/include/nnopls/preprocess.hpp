#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnopls/matrix.hpp"

namespace nnopls {

struct PreprocessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GrayImage {
  Matrix pixels; // h x w, values in [0, 1]
  std::string provenance;

  std::size_t height() const { return pixels.rows(); }
  std::size_t width() const { return pixels.cols(); }
};

struct SpectrumVector {
  std::vector<double> values; // rho^2 entries, row-major, >= 0
  std::size_t grid = 0;       // rho
};

struct FrameSeries {
  Matrix coeffs; // c coefficient trajectories x L frames
  double frame_rate_hz = 400.0 / 3.0;
};

// 1-D DFT, direct summation with a precomputed twiddle table. Supports any
// length (the image sides and series lengths here are small).
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x);

// Separable 2-D DFT of a real image.
std::vector<std::complex<double>> dft2(const Matrix& image);

std::vector<GrayImage> tile_image(const GrayImage& image, std::size_t rows,
                                  std::size_t cols);

// Mean-subtract, 2-D DFT, |F|^2, zero-frequency centering, block-average to
// rho x rho, vectorize row-major.
SpectrumVector image_to_spectrum(const GrayImage& image, std::size_t rho);

// P[k] = |F[k]|^2 / L for k = 0 .. L/2. L must be even.
std::vector<double> periodogram(const std::vector<double>& series);

// Periodogram of the last window_len frames of each coefficient row,
// concatenated in coefficient order.
std::vector<double> integrate_frames(const FrameSeries& series, std::size_t window_len);

} // namespace nnopls
