#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "morphbench/dirichlet.hpp"
#include "morphbench/rng.hpp"
#include "morphbench/schema.hpp"

using namespace morphbench;

namespace {

const DecisionTreeSchema& schema() {
  static const DecisionTreeSchema s = build_gzd5_schema();
  return s;
}

// Reference values computed with mpmath at 30 digits.
struct RefPoint {
  double x, y;
};

std::vector<int> flat_votes(int slot, int count) {
  std::vector<int> v(34, 0);
  v[static_cast<size_t>(slot)] = count;
  return v;
}

}  // namespace

TEST_CASE("log_gamma matches high-precision references") {
  const RefPoint table[] = {
      {0.5, 0.572364942924700087},   {1.5, -0.120782237635245222},
      {3.7, 1.42807232666538792},    {7.25, 7.05218545073853944},
      {10.2, 13.2542667442355517},   {34.5, 86.8139709417810742},
      {57.1, 172.756310949256735},   {99.9, 358.674239451977538},
      {101.0, 363.73937555556349},   {150.25, 601.261504032499726},
  };
  for (const auto& [x, y] : table)
    CHECK(special::log_gamma(x) == doctest::Approx(y).epsilon(1e-13));
  CHECK(special::log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(special::log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("digamma matches high-precision references") {
  const RefPoint table[] = {
      {0.5, -1.96351002602142348}, {1.0, -0.577215664901532861},
      {1.5, 0.0364899739785765206}, {2.5, 0.703156640645243187},
      {4.2, 1.31133889128659958},  {7.3, 1.9178203356379861},
      {13.37, 2.55515031092757407}, {50.0, 3.9019896734278922},
      {101.5, 4.61512460133806412}, {199.0, 5.29079015759177091},
  };
  for (const auto& [x, y] : table)
    CHECK(special::digamma(x) == doctest::Approx(y).epsilon(1e-13));
  // Recurrence psi(x+1) = psi(x) + 1/x.
  for (double x : {0.7, 3.3, 12.0, 80.5})
    CHECK(special::digamma(x + 1.0) ==
          doctest::Approx(special::digamma(x) + 1.0 / x).epsilon(1e-13));
}

TEST_CASE("squash maps reals into (1, 100)") {
  CHECK(squash_to_concentration(0.0) == doctest::Approx(50.5).epsilon(1e-15));
  CHECK(squash_to_concentration(1.0) == doctest::Approx(73.374799284370483).epsilon(1e-14));
  CHECK(squash_to_concentration(-40.0) > 1.0);
  CHECK(squash_to_concentration(40.0) < 100.0);
  // Strictly increasing.
  double prev = squash_to_concentration(-30.0);
  for (double x = -29.0; x <= 30.0; x += 1.0) {
    const double cur = squash_to_concentration(x);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS_AS(squash_to_concentration(std::nan("")), std::runtime_error);

  const std::vector<double> raw = {0.0, 1.0, -2.5};
  const auto mapped = squash_to_concentration(raw);
  REQUIRE(mapped.size() == 3);
  for (size_t i = 0; i < 3; ++i)
    CHECK(mapped[i] == doctest::Approx(squash_to_concentration(raw[i])).epsilon(1e-15));
}

TEST_CASE("concentration vector bounds are strict") {
  CHECK_NOTHROW(ConcentrationVector::checked({1.0000001, 99.9999}));
  CHECK_THROWS_AS(ConcentrationVector::checked({1.0, 50.0}), std::runtime_error);
  CHECK_THROWS_AS(ConcentrationVector::checked({50.0, 100.0}), std::runtime_error);
  CHECK_THROWS_AS(ConcentrationVector::checked({0.5}), std::runtime_error);
  CHECK_THROWS_AS(ConcentrationVector::checked({101.0}), std::runtime_error);
}

TEST_CASE("vote vector derives question totals and validates input") {
  auto v = VoteVector::from_votes(flat_votes(0, 7), schema());
  CHECK(v.question_totals[0] == 7);
  CHECK(v.question_totals[9] == 0);
  CHECK_THROWS_AS(VoteVector::from_votes(std::vector<int>(33, 0), schema()), std::runtime_error);
  auto bad = flat_votes(0, 7);
  bad[5] = -1;
  CHECK_THROWS_AS(VoteVector::from_votes(bad, schema()), std::runtime_error);
}

TEST_CASE("dm log pmf on a worked two-option example") {
  const std::vector<int> k = {1, 1};
  const std::vector<double> alpha = {2.0, 3.0};
  const double lp = dm_log_pmf(k, alpha, true);
  CHECK(lp == doctest::Approx(-0.916290731874155065).epsilon(1e-13));
  CHECK(std::exp(lp) == doctest::Approx(0.4).epsilon(1e-13));
  // Without the coefficient the value shifts by lnG(N+1) - sum lnG(k+1) = ln 2.
  CHECK(dm_log_pmf(k, alpha, false) ==
        doctest::Approx(lp - std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("dm log pmf vanishes when no votes were cast") {
  const std::vector<int> k = {0, 0, 0};
  const std::vector<double> alpha = {3.0, 11.0, 40.0};
  CHECK(dm_log_pmf(k, alpha, false) == 0.0);
  CHECK(dm_log_pmf(k, alpha, true) == 0.0);
}

TEST_CASE("dm pmf normalizes over all outcomes (K=3, N=4)") {
  const std::vector<double> alpha = {1.3, 9.0, 55.5};
  const int N = 4;
  double total = 0.0;
  for (int a = 0; a <= N; ++a)
    for (int b = 0; a + b <= N; ++b) {
      const std::vector<int> k = {a, b, N - a - b};
      total += std::exp(dm_log_pmf(k, alpha, true));
    }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("batch loss averages per-record sums and skips vote-free questions") {
  std::vector<int> votes1(34, 0);
  votes1[0] = 3;  // smooth-or-featured: (3,0,0)
  std::vector<int> votes2(34, 0);
  votes2[1] = 2;  // smooth-or-featured: (0,2,0)
  votes2[3] = 1;  // disk-edge-on: (1,0)
  const std::vector<VoteVector> batch = {VoteVector::from_votes(votes1, schema()),
                                         VoteVector::from_votes(votes2, schema())};
  std::vector<double> a(34, 2.0);
  const std::vector<ConcentrationVector> alphas = {ConcentrationVector::checked(a),
                                                   ConcentrationVector::checked(a)};
  const LossValue loss = dm_nll_loss(batch, alphas, schema());

  auto slice_pmf = [&](const std::vector<int>& flat, int q) {
    const int f = schema().first_slot(q), n = schema().num_answers(q);
    const std::vector<int> k(flat.begin() + f, flat.begin() + f + n);
    const std::vector<double> al(n, 2.0);
    return dm_log_pmf(k, al, false);
  };
  const double rec1 = -slice_pmf(votes1, 0);
  const double rec2 = -slice_pmf(votes2, 0) - slice_pmf(votes2, 1);
  CHECK(loss.value == doctest::Approx(0.5 * (rec1 + rec2)).epsilon(1e-13));
  REQUIRE(loss.per_question.size() == 10);
  CHECK(loss.per_question[0] ==
        doctest::Approx(0.5 * (-slice_pmf(votes1, 0) - slice_pmf(votes2, 0))).epsilon(1e-13));
  CHECK(loss.per_question[1] == doctest::Approx(0.5 * -slice_pmf(votes2, 1)).epsilon(1e-13));
  for (int q = 2; q < 10; ++q) CHECK(loss.per_question[q] == 0.0);
  // value equals the sum of the per-question means.
  double sum = 0.0;
  for (double x : loss.per_question) sum += x;
  CHECK(loss.value == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("gradient is exactly zero on questions without votes") {
  std::vector<int> votes(34, 0);
  votes[0] = 4;
  votes[2] = 1;
  const auto v = VoteVector::from_votes(votes, schema());
  std::vector<double> a(34, 7.5);
  const auto grad = dm_nll_gradient(v, ConcentrationVector::checked(a), schema());
  REQUIRE(static_cast<int>(grad.size()) == 34);
  for (int q = 1; q < 10; ++q)
    for (int s = schema().first_slot(q); s < schema().first_slot(q) + schema().num_answers(q); ++s)
      CHECK(grad[static_cast<size_t>(s)] == 0.0);
  for (int s = 0; s < 3; ++s) CHECK(grad[static_cast<size_t>(s)] != 0.0);
}

TEST_CASE("zero-vote answers still feel the question total") {
  // With k_a = 0 the psi(k+alpha)-psi(alpha) pair cancels, leaving
  // -[psi(A) - psi(N+A)] shared by every slot of the question.
  std::vector<int> votes(34, 0);
  votes[0] = 4;
  votes[2] = 1;
  const auto v = VoteVector::from_votes(votes, schema());
  std::vector<double> a(34, 1.0);
  a[0] = 3.0;
  a[1] = 5.0;
  a[2] = 9.0;
  for (auto& x : a) x = std::min(std::max(x, 1.5), 99.0);
  const auto grad = dm_nll_gradient(v, ConcentrationVector::checked(a), schema());
  const double A = a[0] + a[1] + a[2], N = 5;
  const double shared = -(special::digamma(A) - special::digamma(N + A));
  CHECK(grad[1] == doctest::Approx(shared).epsilon(1e-13));
  CHECK(grad[0] == doctest::Approx(shared - (special::digamma(votes[0] + a[0]) -
                                             special::digamma(a[0])))
                       .epsilon(1e-13));
}

TEST_CASE("gradient agrees with central finite differences") {
  Rng rng(20240601);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> votes(34, 0);
    for (int q = 0; q < 10; ++q) {
      if (rng.uniform() < 0.3) continue;  // leave some questions vote-free
      const int f = schema().first_slot(q), n = schema().num_answers(q);
      for (int s = f; s < f + n; ++s)
        votes[static_cast<size_t>(s)] = static_cast<int>(rng.uniform_below(7));
    }
    std::vector<double> a(34);
    for (auto& x : a) x = 1.5 + 97.0 * rng.uniform();
    const auto v = VoteVector::from_votes(votes, schema());
    const auto grad = dm_nll_gradient(v, ConcentrationVector::checked(a), schema());

    auto nll = [&](const std::vector<double>& alpha) {
      double total = 0.0;
      for (int q = 0; q < 10; ++q) {
        const int f = schema().first_slot(q), n = schema().num_answers(q);
        const std::vector<int> k(votes.begin() + f, votes.begin() + f + n);
        const std::vector<double> al(alpha.begin() + f, alpha.begin() + f + n);
        total -= dm_log_pmf(k, al, false);
      }
      return total;
    };
    for (int s = 0; s < 34; s += 5) {
      auto plus = a, minus = a;
      plus[static_cast<size_t>(s)] += h;
      minus[static_cast<size_t>(s)] -= h;
      const double fd = (nll(plus) - nll(minus)) / (2.0 * h);
      if (std::abs(fd) < 1e-12) {
        CHECK(std::abs(grad[static_cast<size_t>(s)]) < 1e-9);
      } else {
        CHECK(grad[static_cast<size_t>(s)] == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("expected fractions normalize per question") {
  std::vector<double> alpha(34, 2.0);
  alpha[3] = 1.5;  // disk-edge-on: yes
  alpha[4] = 4.5;  // disk-edge-on: no
  const auto f = expected_fractions(alpha, schema());
  REQUIRE(static_cast<int>(f.size()) == 34);
  CHECK(f[3] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(f[4] == doctest::Approx(0.75).epsilon(1e-14));
  for (int q = 0; q < 10; ++q) {
    double sum = 0.0;
    for (int s = schema().first_slot(q); s < schema().first_slot(q) + schema().num_answers(q); ++s)
      sum += f[static_cast<size_t>(s)];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("expected fractions are scale invariant within a question") {
  Rng rng(77);
  std::vector<double> alpha(34);
  for (auto& x : alpha) x = 1.0 + 50.0 * rng.uniform();
  const auto base = expected_fractions(alpha, schema());
  auto scaled = alpha;
  const int q = 4;  // bulge-size
  for (int s = schema().first_slot(q); s < schema().first_slot(q) + schema().num_answers(q); ++s)
    scaled[static_cast<size_t>(s)] *= 17.0;
  const auto f = expected_fractions(scaled, schema());
  for (int s = 0; s < 34; ++s)
    CHECK(f[static_cast<size_t>(s)] == doctest::Approx(base[static_cast<size_t>(s)]).epsilon(1e-12));
}
