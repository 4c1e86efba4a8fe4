#pragma once

#include <span>
#include <vector>

#include "morphbench/schema.hpp"

namespace morphbench {

// ln Gamma(x) and the digamma function psi(x), x > 0. Accuracy (~1e-13 or
// better in double) is pinned by reference-value tests.
namespace special {
double log_gamma(double x);
double digamma(double x);
}  // namespace special

// The 34 concentration parameters predicted by a network head, each in the
// open interval (lo, hi) = (1, 100).
struct ConcentrationVector {
  std::vector<double> alpha;

  static constexpr double kLo = 1.0;
  static constexpr double kHi = 100.0;

  // Throws unless every component lies strictly inside (kLo, kHi).
  static ConcentrationVector checked(std::vector<double> alpha);
};

// Votes for one galaxy, flat over all answer slots, with per-question totals.
struct VoteVector {
  std::vector<int> k;
  std::vector<int> question_totals;

  static VoteVector from_votes(std::vector<int> votes, const DecisionTreeSchema& schema);
};

// Negative log likelihood, summed over questions and averaged over a batch.
struct LossValue {
  double value = 0.0;
  std::vector<double> per_question;  // batch-mean NLL per question
};

// Componentwise lo + (hi-lo) * sigmoid(x): strictly increasing, output in
// (lo, hi). Throws on non-finite input.
double squash_to_concentration(double raw, double lo = ConcentrationVector::kLo,
                               double hi = ConcentrationVector::kHi);
std::vector<double> squash_to_concentration(std::span<const double> raw,
                                            double lo = ConcentrationVector::kLo,
                                            double hi = ConcentrationVector::kHi);

// Dirichlet-Multinomial log pmf for one question. With A = sum(alpha) and
// N = sum(k):
//   lnG(A) - lnG(N+A) + sum_a [lnG(k_a + alpha_a) - lnG(alpha_a)]
// plus the multinomial coefficient lnG(N+1) - sum_a lnG(k_a + 1) when
// include_coefficient is set. The coefficient is constant in alpha, so the
// training loss leaves it off; normalization tests turn it on.
double dm_log_pmf(std::span<const int> k, std::span<const double> alpha,
                  bool include_coefficient);

// Batch loss: per record -sum_q dm_log_pmf(q) with the coefficient off,
// averaged over the batch. Questions with zero votes contribute exactly 0.
LossValue dm_nll_loss(const std::vector<VoteVector>& batch_votes,
                      const std::vector<ConcentrationVector>& batch_alpha,
                      const DecisionTreeSchema& schema);

// d/d alpha of the per-record NLL. For answer a in question q:
//   -[psi(A_q) - psi(N_q + A_q) + psi(k_a + alpha_a) - psi(alpha_a)]
// exactly zero on questions with no votes.
std::vector<double> dm_nll_gradient(const VoteVector& k, const ConcentrationVector& alpha,
                                    const DecisionTreeSchema& schema);

// Posterior expected vote fractions: f_a = alpha_a / A_q within each
// question. Works on any positive alpha; a common positive scaling of a
// question's slice leaves its fractions unchanged.
std::vector<double> expected_fractions(std::span<const double> alpha,
                                       const DecisionTreeSchema& schema);

}  // namespace morphbench
