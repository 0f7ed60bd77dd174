#include "nnopls/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nnopls {

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(lineno) + ": unparsable value '" +
                      cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(rows.front().size()) + " fields, got " +
                    std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": empty matrix");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_csv_matrix(const Matrix& m, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp);
    char buf[40];
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        out << buf;
      }
      out << '\n';
    }
    if (!out) throw IoError("write failure on " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) + ": unparsable label '" +
                    line + "'");
    }
  }
  if (labels.empty()) throw IoError(path + ": no labels");
  return labels;
}

namespace {

void skip_pnm_whitespace(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

std::size_t read_pnm_number(std::istream& in) {
  skip_pnm_whitespace(in);
  std::size_t v = 0;
  if (!(in >> v)) throw IoError("truncated PNM header");
  return v;
}

} // namespace

GrayImage read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  const bool pgm_ascii = magic == "P2", pgm_bin = magic == "P5";
  const bool ppm_ascii = magic == "P3", ppm_bin = magic == "P6";
  if (!(pgm_ascii || pgm_bin || ppm_ascii || ppm_bin))
    throw IoError(path + ": unsupported image magic '" + magic + "'");

  const std::size_t w = read_pnm_number(in);
  const std::size_t h = read_pnm_number(in);
  const std::size_t maxval = read_pnm_number(in);
  if (maxval == 0 || maxval > 65535) throw IoError(path + ": bad maxval");
  const std::size_t channels = (ppm_ascii || ppm_bin) ? 3 : 1;
  const double inv = 1.0 / double(maxval);

  std::vector<double> raw(w * h * channels);
  if (pgm_ascii || ppm_ascii) {
    for (auto& v : raw) {
      std::size_t x = read_pnm_number(in);
      v = double(x);
    }
  } else {
    in.get(); // single whitespace after maxval
    const bool two_byte = maxval > 255;
    for (auto& v : raw) {
      int b0 = in.get();
      if (b0 < 0) throw IoError(path + ": truncated pixel data");
      if (two_byte) {
        int b1 = in.get();
        if (b1 < 0) throw IoError(path + ": truncated pixel data");
        v = double(b0 * 256 + b1);
      } else {
        v = double(b0);
      }
    }
  }

  GrayImage img;
  img.provenance = path;
  img.pixels = Matrix(h, w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t base = (r * w + c) * channels;
      double g = channels == 1
                     ? raw[base]
                     : 0.299 * raw[base] + 0.587 * raw[base + 1] + 0.114 * raw[base + 2];
      img.pixels(r, c) = g * inv;
    }
  return img;
}

} // namespace nnopls
