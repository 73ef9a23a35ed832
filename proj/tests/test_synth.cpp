#include <cmath>
#include <cstring>

#include "doctest.h"
#include "gapkit/error.hpp"
#include "gapkit/metrics.hpp"
#include "gapkit/synth.hpp"

using namespace gapkit;

TEST_SUITE("synth") {
  TEST_CASE("zero gap and zero noise give identical modalities") {
    SynthSpec s;
    s.n = 40;
    s.gap = 0;
    s.noise = 0;
    const auto ds = generate_paired(s);
    CHECK(ds.images().data() == ds.texts().data());
    const auto st = paired_distance_stats(ds, DistanceMetric::Euclidean);
    CHECK(st.paired_mean == 0.0);
  }

  TEST_CASE("large gap separates the modalities completely") {
    SynthSpec s;
    s.n = 200;
    s.gap = 10;
    s.noise = 0.01;
    const auto h = heterogeneity_indices(stack_mixed(generate_paired(s)));
    CHECK(std::isinf(h.itr));
    CHECK(std::isinf(h.tir));
  }

  TEST_CASE("same seed gives bit-identical output, different seeds differ") {
    SynthSpec s;
    s.n = 50;
    s.seed = 77;
    const auto a = generate_paired(s);
    const auto b = generate_paired(s);
    CHECK(std::memcmp(a.images().data().data(), b.images().data().data(), sizeof(double) * 50 * 128) == 0);
    CHECK(std::memcmp(a.texts().data().data(), b.texts().data().data(), sizeof(double) * 50 * 128) == 0);
    s.seed = 78;
    CHECK(generate_paired(s).images().data() != a.images().data());
  }

  TEST_CASE("rows are unit length") {
    SynthSpec s;
    s.n = 30;
    const auto ds = generate_paired(s);
    for (Index i = 0; i < 30; ++i) {
      CHECK(std::abs(ds.images().data().row(i).norm() - 1.0) < 1e-12);
      CHECK(std::abs(ds.texts().data().row(i).norm() - 1.0) < 1e-12);
    }
  }

  TEST_CASE("invalid specs are rejected") {
    SynthSpec s;
    s.d_embed = 16;
    s.d_latent = 32;
    CHECK_THROWS(generate_paired(s));
    s = SynthSpec{};
    s.n = 1;
    CHECK_THROWS(generate_paired(s));
    s = SynthSpec{};
    s.noise = -1;
    CHECK_THROWS(generate_paired(s));
  }

  TEST_CASE("property: FID is non-decreasing in the gap") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      double prev = -1;
      for (double gap : {0.0, 1.0, 2.0, 5.0, 10.0}) {
        SynthSpec s;
        s.n = 300;
        s.gap = gap;
        s.seed = seed;
        const auto ds = generate_paired(s);
        const double f = fid(ds.images(), ds.texts());
        CHECK(f >= prev);
        prev = f;
      }
    }
  }

  TEST_CASE("property: each image's nearest text is its partner for at least 95% of pairs") {
    for (double gap : {0.0, 5.0, 50.0}) {
      SynthSpec s;
      s.n = 300;
      s.gap = gap;
      s.noise = 0.05;
      const auto ds = generate_paired(s);
      const Matrix sims = ds.images().data() * ds.texts().data().transpose();
      Index hits = 0;
      for (Index i = 0; i < s.n; ++i) {
        Index best;
        sims.row(i).maxCoeff(&best);
        if (best == i) ++hits;
      }
      CHECK(static_cast<double>(hits) / static_cast<double>(s.n) >= 0.95);
    }
  }
}
