#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "gapkit/embedding_io.hpp"
#include "gapkit/error.hpp"
#include "gapkit/npy.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gapkit;
namespace fs = std::filesystem;

TEST_SUITE("embedding_io") {
  TEST_CASE("load returns stored rows and default ids") {
    const auto dir = testutil::scratch_dir("io");
    Matrix m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    npy::write(dir / "m.npy", m.data(), {2, 3});
    const auto e = load_matrix(dir / "m.npy", Modality::Image);
    CHECK(e.data() == m);
    CHECK(e.ids() == std::vector<std::string>{"0", "1"});
    CHECK(e.modality() == Modality::Image);
    fs::remove_all(dir);
  }

  TEST_CASE("non-finite entry names the first offending row") {
    const auto dir = testutil::scratch_dir("io");
    Matrix m = Matrix::Ones(10, 2);
    m(7, 1) = std::numeric_limits<double>::quiet_NaN();
    m(9, 0) = std::numeric_limits<double>::infinity();
    npy::write(dir / "m.npy", m.data(), {10, 2});
    CHECK_THROWS_WITH_AS(load_matrix(dir / "m.npy", Modality::Text), doctest::Contains("non-finite value at row 7"), ValidationError);
    fs::remove_all(dir);
  }

  TEST_CASE("zero-row file is an empty matrix") {
    const auto dir = testutil::scratch_dir("io");
    npy::write(dir / "m.npy", nullptr, {0, 4});
    CHECK_THROWS_WITH_AS(load_matrix(dir / "m.npy", Modality::Text), doctest::Contains("empty matrix"), ValidationError);
    fs::remove_all(dir);
  }

  TEST_CASE("duplicate ids are rejected") {
    CHECK_THROWS_WITH(EmbeddingMatrix(Matrix::Ones(2, 2), Modality::Image, {"a", "a"}),
                      doctest::Contains("duplicate id"));
  }

  TEST_CASE("save then load is bitwise identical") {
    const auto dir = testutil::scratch_dir("io");
    const EmbeddingMatrix m(oracle::gaussian(10, 4, 11), Modality::Text);
    save_matrix(m, dir / "r.npy");
    const auto back = load_matrix(dir / "r.npy", Modality::Text);
    CHECK(std::memcmp(back.data().data(), m.data().data(), sizeof(double) * 40) == 0);

    const EmbeddingMatrix zero(Matrix::Zero(1, 1), Modality::Image);
    save_matrix(zero, dir / "z.npy");
    CHECK(load_matrix(dir / "z.npy", Modality::Image).data()(0, 0) == 0.0);
    fs::remove_all(dir);
  }

  TEST_CASE("saving into a missing directory is an I/O error") {
    const EmbeddingMatrix m(Matrix::Ones(1, 1), Modality::Image);
    CHECK_THROWS_AS(save_matrix(m, "/nonexistent-dir/for/sure/m.npy"), IoError);
  }

  TEST_CASE("manifest loading checks shapes and resolves relative paths") {
    const auto dir = testutil::scratch_dir("io");
    const Matrix a = oracle::gaussian(6, 4, 1);
    npy::write(dir / "x.npy", a.data(), {6, 4});
    npy::write(dir / "y.npy", a.data(), {6, 4});
    npy::write(dir / "y3.npy", a.data(), {6, 3});
    npy::write(dir / "y5.npy", a.data(), {5, 4});
    {
      std::ofstream(dir / "ok.json") << R"({"images": "x.npy", "texts": "y.npy"})";
      std::ofstream(dir / "dim.json") << R"({"images": "x.npy", "texts": "y3.npy"})";
      std::ofstream(dir / "cnt.json") << R"({"images": "x.npy", "texts": "y5.npy"})";
      std::ofstream(dir / "missing.json") << R"({"images": "x.npy", "texts": "nope.npy"})";
      std::ofstream(dir / "ids.txt") << "a\nb\nc\nd\ne\nf\n";
      std::ofstream(dir / "withids.json") << R"({"images": "x.npy", "texts": "y.npy", "ids": "ids.txt"})";
    }
    const auto ds = load_paired_dataset(dir / "ok.json");
    CHECK(ds.size() == 6);
    CHECK(ds.dim() == 4);
    CHECK(read_manifest(dir / "ok.json").method == "ORIG");
    CHECK_THROWS_WITH(load_paired_dataset(dir / "dim.json"), doctest::Contains("dimension mismatch"));
    CHECK_THROWS_WITH(load_paired_dataset(dir / "cnt.json"), doctest::Contains("pair count mismatch"));
    CHECK_THROWS_AS(load_paired_dataset(dir / "missing.json"), IoError);
    CHECK(load_paired_dataset(dir / "withids.json").images().ids().back() == "f");
    fs::remove_all(dir);
  }

  TEST_CASE("l2 normalisation") {
    Matrix m(1, 2);
    m << 3, 4;
    const auto u = l2_normalize_rows(EmbeddingMatrix(m, Modality::Image));
    CHECK(u.data()(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(u.data()(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_WITH(l2_normalize_rows(EmbeddingMatrix(Matrix::Zero(1, 2), Modality::Image)),
                      doctest::Contains("zero-norm row 0"));
  }

  TEST_CASE("property: normalisation yields unit rows and is idempotent") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto once = l2_normalize_rows(EmbeddingMatrix(oracle::gaussian(15, 6, seed, 3.0), Modality::Text));
      const auto twice = l2_normalize_rows(once);
      for (Index i = 0; i < 15; ++i) CHECK(std::abs(once.data().row(i).norm() - 1.0) <= 1e-12);
      CHECK((once.data() - twice.data()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("stack_mixed layout and split round trip") {
    Matrix x(2, 2), y(2, 2);
    x << 1, 2, 3, 4;
    y << 5, 6, 7, 8;
    const PairedDataset ds(EmbeddingMatrix(x, Modality::Image), EmbeddingMatrix(y, Modality::Text));
    const auto mc = stack_mixed(ds);
    CHECK(mc.z.rows() == 4);
    CHECK(mc.labels == std::vector<Modality>{Modality::Image, Modality::Image, Modality::Text, Modality::Text});
    CHECK(mc.pair_of == std::vector<Index>{2, 3, 0, 1});
    const auto back = split_mixed(mc);
    CHECK(back.images().data() == x);
    CHECK(back.texts().data() == y);

    const PairedDataset one(EmbeddingMatrix(Matrix::Ones(1, 3), Modality::Image),
                            EmbeddingMatrix(Matrix::Zero(1, 3), Modality::Text));
    CHECK(stack_mixed(one).pair_of == std::vector<Index>{1, 0});
  }

  TEST_CASE("property: stack then split is the identity on random datasets") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const PairedDataset ds(EmbeddingMatrix(oracle::gaussian(9, 3, seed), Modality::Image),
                             EmbeddingMatrix(oracle::gaussian(9, 3, seed + 100), Modality::Text));
      const auto back = split_mixed(stack_mixed(ds));
      CHECK(back.images().data() == ds.images().data());
      CHECK(back.texts().data() == ds.texts().data());
    }
  }
}
