#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gapkit/types.hpp"

namespace gapkit::npy {

using RowMatrix = gapkit::Matrix;

// Array contents read from an .npy payload, widened to double.
struct Array {
  std::vector<std::uint64_t> shape;
  std::vector<double> values;  // C order
};

// Parses an in-memory NPY v1.0/v2.0 blob. Accepts little-endian f4/f8 in C order.
Array parse(const std::string& bytes);
Array read(const std::filesystem::path& path);

// Serialises as NPY v1.0, dtype '<f8', C order.
std::string encode(const double* data, const std::vector<std::uint64_t>& shape);
void write(const std::filesystem::path& path, const double* data,
           const std::vector<std::uint64_t>& shape);

RowMatrix to_matrix(const Array& a);
std::string encode_matrix(const Eigen::Ref<const RowMatrix>& m);
std::string encode_vector(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace gapkit::npy
