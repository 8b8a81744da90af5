#pragma once

#include "lmf/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace lmf {

// A labelled numeric matrix read from CSV. The first row holds column
// identifiers, the first column row identifiers; the corner cell is ignored.
// Empty cells and "NA" are missing.
struct MatrixFile {
  std::string source;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Matrix values;  // missing cells hold NaN
  Mask observed;

  bool complete() const { return observed.all(); }
};

MatrixFile parse_matrix_csv(std::istream& in, const std::string& source);
MatrixFile read_matrix_csv(const std::string& path);

// Writes with 17 significant digits; NaN is written as NA.
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& col_ids);
void write_matrix_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& col_ids);

// "prefix1", "prefix2", ...
std::vector<std::string> numbered_ids(const std::string& prefix, Eigen::Index n);

// Reorders Y's columns to X's column order and Z's rows to X's row order.
// Throws ValidationError naming the identifiers that do not match.
struct AlignedData {
  LinkedDataset data;
  std::vector<std::string> x_rows, x_cols, y_rows, z_cols;
};
AlignedData align_linked(const MatrixFile& x, const MatrixFile& y, const MatrixFile& z);

}  // namespace lmf
