#include "gapkit/synth.hpp"

#include <cmath>
#include <random>

#include "gapkit/error.hpp"

namespace gapkit {
namespace {

class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  Eigen::MatrixXd matrix(Index r, Index c) {
    Eigen::MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = next();
    return m;
  }

 private:
  // 53 random bits -> [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  // Fix column signs so Q does not depend on the QR implementation's sign convention.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Index c = 0; c < a.cols(); ++c)
    if (r(c, c) < 0) q.col(c) = -q.col(c);
  return q;
}

}  // namespace

void SynthSpec::validate() const {
  if (n < 2) throw PreconditionError("n must be >= 2");
  if (d_latent < 1) throw PreconditionError("d_latent must be >= 1");
  if (d_embed < d_latent) throw PreconditionError("d_embed must be >= d_latent");
  if (!(gap >= 0.0) || !(noise >= 0.0)) throw PreconditionError("gap and noise must be >= 0");
  if (!(map_mismatch >= 0.0)) throw PreconditionError("map_mismatch must be >= 0");
}

PairedDataset generate_paired(const SynthSpec& spec) {
  spec.validate();
  NormalSource rng(spec.seed);
  const Index dl = spec.d_latent;
  const Index de = spec.d_embed;

  const Eigen::MatrixXd r_img = orthonormal_columns(rng.matrix(de, dl));

  Vector u = rng.matrix(de, 1).col(0);
  if (de > dl) u -= r_img * (r_img.transpose() * u);
  u.normalize();

  Vector anchor = rng.matrix(dl, 1).col(0);
  const double anchor_norm = spec.anchor < 0.0 ? std::sqrt(static_cast<double>(dl)) : spec.anchor;
  anchor *= anchor_norm / anchor.norm();

  // typical norm of a + xi
  const double radius = std::sqrt(anchor_norm * anchor_norm + static_cast<double>(dl));

  const Eigen::MatrixXd mismatch = rng.matrix(de, dl);
  const Eigen::MatrixXd r_txt =
      spec.map_mismatch > 0.0 ? orthonormal_columns(r_img + spec.map_mismatch * mismatch) : r_img;

  Matrix x(spec.n, de), y(spec.n, de);
  for (Index i = 0; i < spec.n; ++i) {
    Vector z = anchor + rng.matrix(dl, 1).col(0);
    // Equal latent norms make the final L2 normalisation a common rescaling.
    const double zn = z.norm();
    if (zn > 0.0) z *= radius / zn;
    const Vector e1 = rng.matrix(de, 1).col(0);
    const Vector e2 = rng.matrix(de, 1).col(0);
    Vector xi = r_img * z + spec.gap * u + spec.noise * e1;
    Vector yi = r_txt * z - spec.gap * u + spec.noise * e2;
    x.row(i) = xi.normalized().transpose();
    y.row(i) = yi.normalized().transpose();
  }
  return PairedDataset(EmbeddingMatrix(std::move(x), Modality::Image),
                       EmbeddingMatrix(std::move(y), Modality::Text));
}

}  // namespace gapkit
