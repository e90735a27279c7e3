#pragma once

#include <Eigen/Sparse>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>

#include "tpc/errors.hpp"
#include "tpc/tensor3.hpp"

namespace tpc {

/// Compressed sparse row matrix (row offsets, column indices, values).
using SparseSystemMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Matrix Market "coordinate real general" export, 1-based indices,
/// entries in row-major order.
inline void save_matrix_market(const std::filesystem::path& path, const SparseSystemMatrix& a) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << " " << a.cols() << " " << a.nonZeros() << "\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index r = 0; r < a.outerSize(); ++r)
    for (SparseSystemMatrix::InnerIterator it(a, r); it; ++it)
      os << (it.row() + 1) << " " << (it.col() + 1) << " " << it.value() << "\n";
  if (!os) throw InvalidArgument("write failed: " + path.string());
}

}  // namespace tpc
