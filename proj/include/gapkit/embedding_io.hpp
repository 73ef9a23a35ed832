#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gapkit/types.hpp"

namespace gapkit {

enum class Modality { Image, Text, Joint };

std::string_view to_string(Modality m);

/// Dense n x d embedding matrix with a modality tag and one id per row.
///
/// Construction validates the invariants (non-empty, finite, unique ids), so
/// every live instance is well formed. Instances are immutable.
class EmbeddingMatrix {
 public:
  /// Empty `ids` means "row index as decimal string".
  EmbeddingMatrix(Matrix data, Modality modality, std::vector<std::string> ids = {});

  const Matrix& data() const noexcept { return data_; }
  Index rows() const noexcept { return data_.rows(); }
  Index cols() const noexcept { return data_.cols(); }
  Modality modality() const noexcept { return modality_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  Matrix data_;
  Modality modality_;
  std::vector<std::string> ids_;
};

/// Positionally paired images/texts: row i of images belongs with row i of texts.
class PairedDataset {
 public:
  PairedDataset(EmbeddingMatrix images, EmbeddingMatrix texts);

  const EmbeddingMatrix& images() const noexcept { return images_; }
  const EmbeddingMatrix& texts() const noexcept { return texts_; }
  Index size() const noexcept { return images_.rows(); }
  Index dim() const noexcept { return images_.cols(); }

 private:
  EmbeddingMatrix images_;
  EmbeddingMatrix texts_;
};

/// Stacked corpus Z = [X; Y]. Rows [0, n) are images, [n, 2n) texts.
struct MixedCorpus {
  Matrix z;
  std::vector<Modality> labels;
  std::vector<Index> pair_of;

  Index pairs() const noexcept { return z.rows() / 2; }
};

/// On-disk pair manifest. Relative paths resolve against the manifest's directory.
struct Manifest {
  std::filesystem::path images;
  std::filesystem::path texts;
  std::optional<std::filesystem::path> ids;
  std::string dataset;  // free-form label; defaults to the manifest stem
  std::string method;   // ORIG when absent
  std::string model;    // optional encoder label, used as the report row
};

EmbeddingMatrix load_matrix(const std::filesystem::path& path, Modality modality);
void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path);

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m, const std::filesystem::path& path);
PairedDataset load_paired_dataset(const std::filesystem::path& manifest);

/// Writes images.npy, texts.npy and manifest.json into `dir`; returns the manifest path.
std::filesystem::path save_paired_dataset(const PairedDataset& ds, const std::filesystem::path& dir,
                                          const std::string& dataset, const std::string& method,
                                          const std::string& model = {});

EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& m);
PairedDataset l2_normalize_rows(const PairedDataset& ds);

MixedCorpus stack_mixed(const PairedDataset& ds);
PairedDataset split_mixed(const MixedCorpus& mc);

}  // namespace gapkit
