#include "morphbench/dirichlet.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <stdexcept>

namespace morphbench {

namespace special {

double log_gamma(double x) { return std::lgamma(x); }

double digamma(double x) { return boost::math::digamma(x); }

}  // namespace special

ConcentrationVector ConcentrationVector::checked(std::vector<double> alpha) {
  for (double a : alpha)
    if (!(a > kLo && a < kHi))
      throw std::runtime_error("concentration component " + std::to_string(a) +
                               " outside the open interval (1, 100)");
  return ConcentrationVector{std::move(alpha)};
}

VoteVector VoteVector::from_votes(std::vector<int> votes, const DecisionTreeSchema& schema) {
  if (static_cast<int>(votes.size()) != schema.total_answers())
    throw std::runtime_error("vote vector has " + std::to_string(votes.size()) +
                             " slots, schema expects " + std::to_string(schema.total_answers()));
  VoteVector v;
  v.k = std::move(votes);
  v.question_totals.assign(schema.num_questions(), 0);
  for (int q = 0; q < schema.num_questions(); ++q)
    for (int s = schema.first_slot(q); s < schema.first_slot(q) + schema.num_answers(q); ++s) {
      if (v.k[s] < 0) throw std::runtime_error("negative vote count");
      v.question_totals[q] += v.k[s];
    }
  return v;
}

double squash_to_concentration(double raw, double lo, double hi) {
  if (!std::isfinite(raw)) throw std::runtime_error("non-finite input to concentration squash");
  const double v = lo + (hi - lo) / (1.0 + std::exp(-raw));
  // Large |raw| saturates to the bounds in floating point; keep the promised
  // open interval by stopping at the nearest representable interior values.
  return std::min(std::max(v, std::nextafter(lo, hi)), std::nextafter(hi, lo));
}

std::vector<double> squash_to_concentration(std::span<const double> raw, double lo, double hi) {
  std::vector<double> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) out[i] = squash_to_concentration(raw[i], lo, hi);
  return out;
}

double dm_log_pmf(std::span<const int> k, std::span<const double> alpha,
                  bool include_coefficient) {
  if (k.size() != alpha.size())
    throw std::runtime_error("vote and concentration slices differ in length");
  double alpha_total = 0.0;
  int votes_total = 0;
  for (size_t a = 0; a < k.size(); ++a) {
    if (k[a] < 0) throw std::runtime_error("negative vote count");
    alpha_total += alpha[a];
    votes_total += k[a];
  }
  if (votes_total == 0) return 0.0;

  double lp = special::log_gamma(alpha_total) - special::log_gamma(votes_total + alpha_total);
  for (size_t a = 0; a < k.size(); ++a)
    lp += special::log_gamma(k[a] + alpha[a]) - special::log_gamma(alpha[a]);
  if (include_coefficient) {
    lp += special::log_gamma(votes_total + 1.0);
    for (size_t a = 0; a < k.size(); ++a) lp -= special::log_gamma(k[a] + 1.0);
  }
  return lp;
}

LossValue dm_nll_loss(const std::vector<VoteVector>& batch_votes,
                      const std::vector<ConcentrationVector>& batch_alpha,
                      const DecisionTreeSchema& schema) {
  if (batch_votes.empty()) throw std::runtime_error("empty batch");
  if (batch_votes.size() != batch_alpha.size())
    throw std::runtime_error("batch vote/concentration size mismatch");

  LossValue loss;
  loss.per_question.assign(schema.num_questions(), 0.0);
  for (size_t i = 0; i < batch_votes.size(); ++i) {
    const auto& votes = batch_votes[i];
    const auto& alpha = batch_alpha[i].alpha;
    if (static_cast<int>(votes.k.size()) != schema.total_answers() ||
        static_cast<int>(alpha.size()) != schema.total_answers())
      throw std::runtime_error("batch entry does not match the schema slot count");
    for (int q = 0; q < schema.num_questions(); ++q) {
      const int first = schema.first_slot(q);
      const int count = schema.num_answers(q);
      const double nll = -dm_log_pmf(std::span(votes.k).subspan(first, count),
                                     std::span(alpha).subspan(first, count),
                                     /*include_coefficient=*/false);
      loss.per_question[q] += nll;
    }
  }
  const double inv_batch = 1.0 / static_cast<double>(batch_votes.size());
  for (double& v : loss.per_question) v *= inv_batch;
  for (double v : loss.per_question) loss.value += v;
  return loss;
}

std::vector<double> dm_nll_gradient(const VoteVector& votes, const ConcentrationVector& alpha,
                                    const DecisionTreeSchema& schema) {
  if (static_cast<int>(votes.k.size()) != schema.total_answers() ||
      static_cast<int>(alpha.alpha.size()) != schema.total_answers())
    throw std::runtime_error("vote/concentration vectors do not match the schema slot count");

  std::vector<double> grad(schema.total_answers(), 0.0);
  for (int q = 0; q < schema.num_questions(); ++q) {
    const int first = schema.first_slot(q);
    const int count = schema.num_answers(q);
    if (votes.question_totals[q] == 0) continue;  // loss is constant there

    double alpha_total = 0.0;
    for (int s = first; s < first + count; ++s) alpha_total += alpha.alpha[s];
    const double common = special::digamma(alpha_total) -
                          special::digamma(votes.question_totals[q] + alpha_total);
    for (int s = first; s < first + count; ++s) {
      double g = common;
      if (votes.k[s] > 0)
        g += special::digamma(votes.k[s] + alpha.alpha[s]) - special::digamma(alpha.alpha[s]);
      grad[s] = -g;
    }
  }
  return grad;
}

std::vector<double> expected_fractions(std::span<const double> alpha,
                                       const DecisionTreeSchema& schema) {
  if (static_cast<int>(alpha.size()) != schema.total_answers())
    throw std::runtime_error("concentration vector does not match the schema slot count");
  std::vector<double> f(alpha.size());
  for (int q = 0; q < schema.num_questions(); ++q) {
    const int first = schema.first_slot(q);
    const int count = schema.num_answers(q);
    double total = 0.0;
    for (int s = first; s < first + count; ++s) total += alpha[s];
    for (int s = first; s < first + count; ++s) f[s] = alpha[s] / total;
  }
  return f;
}

}  // namespace morphbench
