#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>

#include "roomctl/linalg.hpp"

namespace roomctl {

/// Coordinate text format: header `i,j,value`, then one nonzero per line with
/// 17 significant digits. Dimensions travel in a metadata sidecar.
void write_coordinate(const SparseMatrix& a, std::ostream& out);
void write_coordinate(const Matrix& a, std::ostream& out);

Matrix read_coordinate_dense(std::istream& in, Eigen::Index rows, Eigen::Index cols);
SparseMatrix read_coordinate_sparse(std::istream& in, Eigen::Index rows, Eigen::Index cols);

/// Opens `path` for writing (creating parent directories) and hands the
/// stream to `body`. Throws Error when the file cannot be written.
void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

/// Opens `path` for reading; throws Error when it does not exist.
void read_file(const std::filesystem::path& path, const std::function<void(std::istream&)>& body);

} // namespace roomctl
