#include "nnopls/preprocess.hpp"

#include <cmath>

namespace nnopls {

std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  const double pi = 3.14159265358979323846;
  // Twiddle table over k*t mod n keeps the inner loop to one complex fma.
  std::vector<std::complex<double>> tw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = -2.0 * pi * double(i) / double(n);
    tw[i] = {std::cos(a), std::sin(a)};
  }
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * tw[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    out[k] = acc;
  }
  return out;
}

std::vector<std::complex<double>> dft2(const Matrix& image) {
  const std::size_t h = image.rows(), w = image.cols();
  std::vector<std::complex<double>> buf(h * w);
  // Rows first.
  for (std::size_t r = 0; r < h; ++r) {
    std::vector<std::complex<double>> row(w);
    for (std::size_t c = 0; c < w; ++c) row[c] = image(r, c);
    auto out = dft(row);
    for (std::size_t c = 0; c < w; ++c) buf[r * w + c] = out[c];
  }
  // Then columns.
  for (std::size_t c = 0; c < w; ++c) {
    std::vector<std::complex<double>> col(h);
    for (std::size_t r = 0; r < h; ++r) col[r] = buf[r * w + c];
    auto out = dft(col);
    for (std::size_t r = 0; r < h; ++r) buf[r * w + c] = out[r];
  }
  return buf;
}

std::vector<GrayImage> tile_image(const GrayImage& image, std::size_t rows,
                                  std::size_t cols) {
  if (rows == 0 || cols == 0) throw PreprocessError("tile_image: zero tiling");
  if (image.height() % rows != 0 || image.width() % cols != 0)
    throw PreprocessError("tile_image: " + std::to_string(image.height()) + "x" +
                          std::to_string(image.width()) + " not divisible into " +
                          std::to_string(rows) + "x" + std::to_string(cols) + " tiles");
  const std::size_t th = image.height() / rows, tw = image.width() / cols;
  std::vector<GrayImage> tiles;
  tiles.reserve(rows * cols);
  for (std::size_t tr = 0; tr < rows; ++tr)
    for (std::size_t tc = 0; tc < cols; ++tc) {
      GrayImage t;
      t.pixels = Matrix(th, tw);
      for (std::size_t r = 0; r < th; ++r)
        for (std::size_t c = 0; c < tw; ++c)
          t.pixels(r, c) = image.pixels(tr * th + r, tc * tw + c);
      t.provenance = image.provenance + "#tile" + std::to_string(tr * cols + tc);
      tiles.push_back(std::move(t));
    }
  return tiles;
}

SpectrumVector image_to_spectrum(const GrayImage& image, std::size_t rho) {
  const std::size_t side = image.height();
  if (image.width() != side)
    throw PreprocessError("image_to_spectrum: image must be square");
  if (rho < 1 || side % rho != 0)
    throw PreprocessError("image_to_spectrum: side " + std::to_string(side) +
                          " not divisible by rho " + std::to_string(rho));

  // DC removal so the dominant zero-frequency bin does not swamp the blocks.
  Matrix centered = image.pixels;
  const double mean = kern::sum(centered.data(), centered.size()) / double(centered.size());
  for (std::size_t i = 0; i < centered.size(); ++i) centered.data()[i] -= mean;

  const auto f = dft2(centered);

  // Energy image with the zero frequency moved to the center (quadrant swap).
  Matrix energy(side, side);
  const std::size_t half = side / 2;
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      const std::size_t rs = (r + half) % side;
      const std::size_t cs = (c + half) % side;
      energy(rs, cs) = std::norm(f[r * side + c]);
    }

  const std::size_t block = side / rho;
  SpectrumVector s;
  s.grid = rho;
  s.values.assign(rho * rho, 0.0);
  const double inv_area = 1.0 / double(block * block);
  for (std::size_t br = 0; br < rho; ++br)
    for (std::size_t bc = 0; bc < rho; ++bc) {
      double acc = 0.0;
      for (std::size_t r = 0; r < block; ++r)
        acc += kern::sum(energy.row(br * block + r) + bc * block, block);
      s.values[br * rho + bc] = acc * inv_area;
    }
  return s;
}

std::vector<double> periodogram(const std::vector<double>& series) {
  const std::size_t l = series.size();
  if (l < 2 || l % 2 != 0)
    throw PreprocessError("periodogram: length must be even and >= 2");
  std::vector<std::complex<double>> x(l);
  for (std::size_t t = 0; t < l; ++t) x[t] = series[t];
  const auto f = dft(x);
  std::vector<double> p(l / 2 + 1);
  for (std::size_t k = 0; k <= l / 2; ++k) p[k] = std::norm(f[k]) / double(l);
  return p;
}

std::vector<double> integrate_frames(const FrameSeries& series, std::size_t window_len) {
  const std::size_t l = series.coeffs.cols();
  if (window_len > l)
    throw PreprocessError("integrate_frames: window " + std::to_string(window_len) +
                          " longer than series of " + std::to_string(l) + " frames");
  std::vector<double> out;
  out.reserve(series.coeffs.rows() * (window_len / 2 + 1));
  for (std::size_t c = 0; c < series.coeffs.rows(); ++c) {
    std::vector<double> seg(window_len);
    for (std::size_t t = 0; t < window_len; ++t)
      seg[t] = series.coeffs(c, l - window_len + t);
    const auto p = periodogram(seg);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

} // namespace nnopls
