#include "freqnaf/freq_mask.hpp"
#include "freqnaf/hash_encoder.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace freqnaf;
using V = std::vector<double>;

TEST_CASE("tabulated mask values") {
  CHECK(freq_mask(0, 10, 4) == V{1, 0, 0, 0});
  CHECK(freq_mask(0, 1, 4) == V{1, 0, 0, 0});
  CHECK(freq_mask(10, 10, 4) == V{1, 1, 1, 1});
  CHECK(freq_mask(5, 10, 4) == V{1, 1, 1, 0});
  CHECK(freq_mask(1, 8, 4) == V{1, 0.5, 0, 0});
}

TEST_CASE("mask past the end is all ones") {
  CHECK(freq_mask(11, 10, 3) == V{1, 1, 1});
  CHECK(freq_mask(1000000, 7, 5) == V(5, 1.0));
}

TEST_CASE("fractional entry grows with t") {
  // x = t*D/T = 3*16/20 = 2.4: entries 1..3 open, entry 4 at 0.4.
  const auto a = freq_mask(3, 20, 16);
  CHECK(a[0] == 1.0);
  CHECK(a[2] == 1.0);
  CHECK(a[3] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(a[4] == 0.0);
}

TEST_CASE("mask argument validation") {
  CHECK_THROWS_AS(freq_mask(0, 0, 4), InputError);
  CHECK_THROWS_AS(freq_mask(0, 4, 0), InputError);
  CHECK_THROWS_AS(freq_mask(-1, 4, 4), InputError);
}

TEST_CASE("monotone in t and in index over random triples") {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<long> Td(1, 5000);
  std::uniform_int_distribution<int> Dd(1, 256);
  for (int n = 0; n < 1000; ++n) {
    const long T = Td(rng);
    const int D = Dd(rng);
    const long t = std::uniform_int_distribution<long>(0, T + 5)(rng);
    const auto a = freq_mask(t, T, D), b = freq_mask(t + 1, T, D);
    CHECK(a[0] == 1.0);
    for (int i = 0; i < D; ++i) {
      CHECK(b[i] >= a[i]);
      CHECK((a[i] >= 0.0 && a[i] <= 1.0));
      if (i + 1 < D) CHECK(a[i] >= a[i + 1]);
    }
  }
}

TEST_CASE("regularization end iteration") {
  CHECK(regularization_end(100, 3000) == 3000);
  CHECK(regularization_end(0, 3000) == 0);
  CHECK(regularization_end(40, 2500) == 1000);
  CHECK(regularization_end(33.3, 10) == 3);
  CHECK_THROWS_AS(regularization_end(50, 0), InputError);
  CHECK_THROWS_AS(regularization_end(120, 10), InputError);
}

TEST_CASE("zero-length schedule is mask free") {
  const FrequencySchedule s(0, 6);
  CHECK(s.alpha(0) == V(6, 1.0));
  const FrequencySchedule r(10, 4);
  CHECK(r.alpha(0) == V{1, 0, 0, 0});
  CHECK(r.alpha(10) == V(4, 1.0));
}

TEST_CASE("applying the mask") {
  const V f{0.3, -2.0, 7.5, 1e-300};
  CHECK(apply_mask(f, V(4, 1.0)) == f);
  const auto one = apply_mask(f, V{1, 0, 0, 0});
  CHECK(std::count_if(one.begin(), one.end(), [](double x) { return x != 0.0; }) == 1);
  CHECK_THROWS_AS(apply_mask(f, V{1, 1}), InputError);
  CHECK(mask_fraction(V{1, 0.5, 0, 0.5}) == 0.5);
}

TEST_CASE("mask Jacobian is diag(alpha)") {
  const V alpha{1.0, 0.7, 0.25, 0.0};
  Eigen::MatrixXd f = Eigen::MatrixXd::Random(4, 3);
  const double h = 1e-6;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Eigen::MatrixXd up = f, down = f;
      up(j, 0) += h;
      down(j, 0) -= h;
      apply_mask_rows(up, alpha);
      apply_mask_rows(down, alpha);
      const double fd = (up(i, 0) - down(i, 0)) / (2 * h);
      CHECK(fd == doctest::Approx(i == j ? alpha[i] : 0.0).epsilon(1e-8));
    }
  Eigen::MatrixXd ones = Eigen::MatrixXd::Random(4, 5), copy = ones;
  apply_mask_rows(ones, V(4, 1.0));
  CHECK(ones == copy);
}

TEST_CASE("first revealed entries belong to the coarsest level") {
  HashEncoderConfig cfg = HashEncoderConfig::spanning(8, 2, 1u << 10, 4, 32);
  const int D = cfg.output_dim(), F = cfg.features_per_level;
  for (long t = 0; t < 100; ++t) {
    const auto a = freq_mask(t, 100, D);
    int open = 0;
    while (open < D && a[open] > 0.0) ++open;
    for (int i = open; i < D; ++i) CHECK(a[i] == 0.0);
    // The open prefix covers whole coarse levels plus at most a partial next one.
    const int level_of_last = (open - 1) / F;
    for (int i = 0; i < level_of_last * F; ++i) CHECK(a[i] == 1.0);
  }
}
