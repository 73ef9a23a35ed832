#pragma once

#include <cstdint>

#include "gapkit/embedding_io.hpp"

namespace gapkit {

/// Parameters of the synthetic modality-gap generator.
///
/// Latent vectors are z_i = rho (a + xi_i) / |a + xi_i| with xi_i ~ N(0, I),
/// a fixed anchor a of norm `anchor` (default sqrt(d_latent)) and
/// rho = sqrt(|a|^2 + d_latent). Both modalities share a common cone as real
/// contrastive embeddings do, and the fixed latent radius keeps row norms
/// nearly equal, so normalisation does not reorder neighbours at any gap. Rows are
///   image_i = R_I z_i + gap u + noise eps_i
///   text_i  = R_T z_i - gap u + noise eps'_i
/// followed by L2 normalisation. R_I is a random orthonormal d_embed x d_latent
/// map, u a unit vector orthogonal to its range (when d_embed > d_latent), and
/// R_T = orth(R_I + map_mismatch G) with G Gaussian (R_T = R_I when 0).
///
/// Randomness: std::mt19937_64 seeded with `seed`, normals drawn with the
/// Marsaglia polar method, in a fixed documented order (R_I, u, a, G, then per
/// pair: xi_i, eps_i, eps'_i).
struct SynthSpec {
  Index n = 500;
  Index d_latent = 32;
  Index d_embed = 128;
  double gap = 5.0;
  double noise = 0.05;
  std::uint64_t seed = 0;
  double anchor = -1.0;        // < 0 means sqrt(d_latent)
  double map_mismatch = 0.0;

  void validate() const;
};

PairedDataset generate_paired(const SynthSpec& spec);

}  // namespace gapkit
