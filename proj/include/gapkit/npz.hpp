#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace gapkit::npz {

// Uncompressed (STORED) zip archive, readable by numpy.load. Member names map
// to raw member bytes; .npy members are decoded with gapkit::npy::parse.
using Members = std::map<std::string, std::string>;

void write(const std::filesystem::path& path, const Members& members);
Members read(const std::filesystem::path& path);

}  // namespace gapkit::npz
