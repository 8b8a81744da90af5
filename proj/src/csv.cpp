#include "lmf/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace lmf {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void check_unique(const std::vector<std::string>& ids, const std::string& what, const std::string& source) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw ValidationError(source + ": duplicate " + what + " identifier '" + id + "'");
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) out += (i ? ", " : "") + ("'" + ids[i] + "'");
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

// Permutation taking `ids` into the order of `reference`, or an error naming
// the identifiers present in only one of the two lists.
std::vector<Eigen::Index> match_ids(const std::vector<std::string>& reference, const std::vector<std::string>& ids,
                                    const std::string& what) {
  std::unordered_map<std::string, Eigen::Index> pos;
  for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = static_cast<Eigen::Index>(i);
  std::vector<std::string> missing, extra;
  std::unordered_set<std::string> ref_set(reference.begin(), reference.end());
  for (const auto& id : reference)
    if (!pos.count(id)) missing.push_back(id);
  for (const auto& id : ids)
    if (!ref_set.count(id)) extra.push_back(id);
  if (!missing.empty() || !extra.empty()) {
    std::string msg = what + " identifiers do not match";
    if (!missing.empty()) msg += "; missing: " + join_ids(missing);
    if (!extra.empty()) msg += "; unexpected: " + join_ids(extra);
    throw ValidationError(msg);
  }
  std::vector<Eigen::Index> order;
  order.reserve(reference.size());
  for (const auto& id : reference) order.push_back(pos.at(id));
  return order;
}

}  // namespace

MatrixFile parse_matrix_csv(std::istream& in, const std::string& source) {
  MatrixFile f;
  f.source = source;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_line(line);
  if (header.size() < 2) throw ValidationError(source + ": header needs at least one column identifier");
  for (std::size_t c = 1; c < header.size(); ++c) f.col_ids.push_back(trim(header[c]));
  check_unique(f.col_ids, "column", source);

  std::vector<std::vector<double>> rows;
  const std::size_t ncols = f.col_ids.size();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != ncols + 1)
      throw ValidationError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " fields, expected " + std::to_string(ncols + 1));
    f.row_ids.push_back(trim(cells[0]));
    std::vector<double> values(ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
      const std::string cell = trim(cells[c + 1]);
      if (cell.empty() || cell == "NA") {
        values[c] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
        throw ValidationError(source + ": cannot parse '" + cell + "' at row '" + f.row_ids.back() + "', column '" +
                              f.col_ids[c] + "' (line " + std::to_string(line_no) + ")");
      values[c] = v;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ValidationError(source + ": no data rows");
  check_unique(f.row_ids, "row", source);

  f.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < ncols; ++c)
      f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  f.observed = f.values.array().isFinite();
  return f;
}

MatrixFile read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return parse_matrix_csv(in, path);
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& col_ids) {
  if (static_cast<Eigen::Index>(row_ids.size()) != m.rows() || static_cast<Eigen::Index>(col_ids.size()) != m.cols())
    throw ValidationError("identifier count does not match matrix shape");
  out << std::setprecision(17);
  for (const auto& id : col_ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << row_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << ',';
      if (std::isfinite(m(i, j)))
        out << m(i, j);
      else
        out << "NA";
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& row_ids,
                      const std::vector<std::string>& col_ids) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  write_matrix_csv(out, m, row_ids, col_ids);
}

std::vector<std::string> numbered_ids(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

AlignedData align_linked(const MatrixFile& x, const MatrixFile& y, const MatrixFile& z) {
  const auto y_order = match_ids(x.col_ids, y.col_ids, "X/Y column");
  const auto z_order = match_ids(x.row_ids, z.row_ids, "X/Z row");

  AlignedData out;
  out.data.x = x.values;
  out.data.y.resize(y.values.rows(), static_cast<Eigen::Index>(y_order.size()));
  for (std::size_t c = 0; c < y_order.size(); ++c) out.data.y.col(static_cast<Eigen::Index>(c)) = y.values.col(y_order[c]);
  out.data.z.resize(static_cast<Eigen::Index>(z_order.size()), z.values.cols());
  for (std::size_t r = 0; r < z_order.size(); ++r) out.data.z.row(static_cast<Eigen::Index>(r)) = z.values.row(z_order[r]);
  if (!x.complete()) out.data.mask_x = x.observed;
  out.x_rows = x.row_ids;
  out.x_cols = x.col_ids;
  out.y_rows = y.row_ids;
  out.z_cols = z.col_ids;
  if (!y.complete()) throw ValidationError(y.source + ": missing values in Y are not supported");
  if (!z.complete()) throw ValidationError(z.source + ": missing values in Z are not supported");
  return out;
}

}  // namespace lmf
