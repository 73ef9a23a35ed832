#include "gapkit/embedding_io.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

#include "gapkit/error.hpp"
#include "gapkit/npy.hpp"

namespace gapkit {
namespace fs = std::filesystem;

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Image: return "image";
    case Modality::Text: return "text";
    case Modality::Joint: return "joint";
  }
  return "unknown";
}

EmbeddingMatrix::EmbeddingMatrix(Matrix data, Modality modality, std::vector<std::string> ids)
    : data_(std::move(data)), modality_(modality), ids_(std::move(ids)) {
  if (data_.rows() < 1 || data_.cols() < 1) throw ValidationError("empty matrix");
  for (Index r = 0; r < data_.rows(); ++r) {
    if (!data_.row(r).allFinite())
      throw ValidationError("non-finite value at row " + std::to_string(r));
  }
  if (ids_.empty()) {
    ids_.reserve(static_cast<std::size_t>(data_.rows()));
    for (Index r = 0; r < data_.rows(); ++r) ids_.push_back(std::to_string(r));
  } else {
    if (static_cast<Index>(ids_.size()) != data_.rows())
      throw ValidationError("id count " + std::to_string(ids_.size()) + " does not match " +
                            std::to_string(data_.rows()) + " rows");
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
      if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "'");
    }
  }
}

PairedDataset::PairedDataset(EmbeddingMatrix images, EmbeddingMatrix texts)
    : images_(std::move(images)), texts_(std::move(texts)) {
  if (images_.rows() != texts_.rows())
    throw ValidationError("pair count mismatch: " + std::to_string(images_.rows()) + " images vs " +
                          std::to_string(texts_.rows()) + " texts");
  if (images_.cols() != texts_.cols())
    throw ValidationError("dimension mismatch: images d=" + std::to_string(images_.cols()) +
                          ", texts d=" + std::to_string(texts_.cols()));
}

namespace {

std::vector<std::string> read_ids(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open id file " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ids.push_back(line);
  }
  return ids;
}

fs::path sidecar_for(const fs::path& path) {
  auto p = path;
  p.replace_extension(".ids");
  return p;
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

}  // namespace

EmbeddingMatrix load_matrix(const fs::path& path, Modality modality) {
  if (!fs::exists(path)) throw IoError("missing file " + path.string());
  auto arr = npy::read(path);
  Matrix data;
  try {
    data = npy::to_matrix(arr);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  std::vector<std::string> ids;
  if (auto side = sidecar_for(path); fs::exists(side)) ids = read_ids(side);
  try {
    return EmbeddingMatrix(std::move(data), modality, std::move(ids));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_matrix(const EmbeddingMatrix& m, const fs::path& path) {
  npy::write(path, m.data().data(),
             {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())});
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("images") || !j.contains("texts"))
    throw IoError(path.string() + ": manifest needs \"images\" and \"texts\"");
  const auto base = path.parent_path();
  Manifest m;
  m.images = resolve(base, j.at("images").get<std::string>());
  m.texts = resolve(base, j.at("texts").get<std::string>());
  if (j.contains("ids") && !j.at("ids").is_null())
    m.ids = resolve(base, j.at("ids").get<std::string>());
  m.dataset = j.value("dataset", path.stem().string());
  m.method = j.value("method", std::string("ORIG"));
  m.model = j.value("model", std::string());
  return m;
}

void write_manifest(const Manifest& m, const fs::path& path) {
  nlohmann::json j;
  const auto base = path.parent_path();
  auto rel = [&](const fs::path& p) {
    return (!base.empty() && p.parent_path() == base) ? p.filename().string() : p.string();
  };
  j["images"] = rel(m.images);
  j["texts"] = rel(m.texts);
  if (m.ids) j["ids"] = rel(*m.ids);
  j["dataset"] = m.dataset;
  j["method"] = m.method;
  if (!m.model.empty()) j["model"] = m.model;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

PairedDataset load_paired_dataset(const fs::path& manifest) {
  const auto m = read_manifest(manifest);
  auto images = load_matrix(m.images, Modality::Image);
  auto texts = load_matrix(m.texts, Modality::Text);
  if (m.ids) {
    auto ids = read_ids(*m.ids);
    images = EmbeddingMatrix(images.data(), Modality::Image, ids);
    texts = EmbeddingMatrix(texts.data(), Modality::Text, std::move(ids));
  }
  return PairedDataset(std::move(images), std::move(texts));
}

fs::path save_paired_dataset(const PairedDataset& ds, const fs::path& dir, const std::string& dataset,
                             const std::string& method, const std::string& model) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  Manifest m;
  m.images = dir / "images.npy";
  m.texts = dir / "texts.npy";
  m.dataset = dataset;
  m.method = method;
  m.model = model;
  save_matrix(ds.images(), m.images);
  save_matrix(ds.texts(), m.texts);
  const auto path = dir / "manifest.json";
  write_manifest(m, path);
  return path;
}

EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& m) {
  Matrix out = m.data();
  for (Index r = 0; r < out.rows(); ++r) {
    const double norm = out.row(r).norm();
    if (norm == 0.0) throw ValidationError("zero-norm row " + std::to_string(r));
    out.row(r) /= norm;
  }
  return EmbeddingMatrix(std::move(out), m.modality(), m.ids());
}

PairedDataset l2_normalize_rows(const PairedDataset& ds) {
  return PairedDataset(l2_normalize_rows(ds.images()), l2_normalize_rows(ds.texts()));
}

MixedCorpus stack_mixed(const PairedDataset& ds) {
  const Index n = ds.size();
  MixedCorpus mc;
  mc.z.resize(2 * n, ds.dim());
  mc.z.topRows(n) = ds.images().data();
  mc.z.bottomRows(n) = ds.texts().data();
  mc.labels.assign(static_cast<std::size_t>(2 * n), Modality::Text);
  mc.pair_of.resize(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i < n; ++i) {
    mc.labels[static_cast<std::size_t>(i)] = Modality::Image;
    mc.pair_of[static_cast<std::size_t>(i)] = i + n;
    mc.pair_of[static_cast<std::size_t>(i + n)] = i;
  }
  return mc;
}

PairedDataset split_mixed(const MixedCorpus& mc) {
  if (mc.z.rows() % 2 != 0 || mc.labels.size() != static_cast<std::size_t>(mc.z.rows()))
    throw ValidationError("malformed mixed corpus");
  const Index n = mc.pairs();
  Matrix x(n, mc.z.cols()), y(n, mc.z.cols());
  Index xi = 0, yi = 0;
  for (Index r = 0; r < mc.z.rows(); ++r) {
    if (mc.labels[static_cast<std::size_t>(r)] == Modality::Image) {
      if (xi >= n) throw ValidationError("mixed corpus has more images than texts");
      x.row(xi++) = mc.z.row(r);
    } else {
      if (yi >= n) throw ValidationError("mixed corpus has more texts than images");
      y.row(yi++) = mc.z.row(r);
    }
  }
  return PairedDataset(EmbeddingMatrix(std::move(x), Modality::Image),
                       EmbeddingMatrix(std::move(y), Modality::Text));
}

}  // namespace gapkit
