#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nnopls/matrix.hpp"
#include "nnopls/preprocess.hpp"

namespace nnopls {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Plain CSV: one matrix row per line, comma-separated, no header.
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(const Matrix& m, const std::string& path);

// One integer per line.
std::vector<int> read_labels(const std::string& path);

// Binary or ASCII PGM (P2/P5); PPM (P3/P6) converted to gray with
// 0.299/0.587/0.114 weights. Values scaled to [0, 1].
GrayImage read_image(const std::string& path);

} // namespace nnopls
