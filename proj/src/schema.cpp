#include "morphbench/schema.hpp"

#include <cstdlib>
#include <set>
#include <stdexcept>

namespace morphbench {

DecisionTreeSchema::DecisionTreeSchema(std::vector<Question> questions)
    : questions_(std::move(questions)) {
  first_slot_.resize(questions_.size());
  for (size_t q = 0; q < questions_.size(); ++q) {
    first_slot_[q] = total_answers_;
    question_index_.emplace(questions_[q].id, static_cast<int>(q));
    for (size_t a = 0; a < questions_[q].answers.size(); ++a) {
      slot_index_.emplace(questions_[q].id + "_" + questions_[q].answers[a], total_answers_);
      question_of_slot_.push_back(static_cast<int>(q));
      ++total_answers_;
    }
    if (questions_[q].parent_question < 0 && root_ < 0) root_ = static_cast<int>(q);
  }
}

std::string DecisionTreeSchema::answer_id(int slot) const {
  const int q = question_of_slot_[slot];
  return questions_[q].id + "_" + questions_[q].answers[slot - first_slot_[q]];
}

int DecisionTreeSchema::slot_of(const std::string& answer_id) const {
  auto it = slot_index_.find(answer_id);
  return it == slot_index_.end() ? -1 : it->second;
}

int DecisionTreeSchema::question_index(const std::string& question_id) const {
  auto it = question_index_.find(question_id);
  return it == question_index_.end() ? -1 : it->second;
}

DecisionTreeSchema build_gzd5_schema() {
  // Questions are listed in the tree's canonical reporting order; answer order
  // fixes the flat 34-slot layout. Parent links carry the triggering answer indices;
  // merging is asked of every volunteer who did not answer "artifact" at the
  // root, so its link lists both non-artifact root answers.
  std::vector<Question> qs;
  auto add = [&qs](std::string id, std::vector<std::string> answers, int parent,
                   std::vector<int> parent_answers, std::string text) {
    Question q;
    q.id = std::move(id);
    q.answers = std::move(answers);
    q.parent_question = parent;
    q.parent_answers = std::move(parent_answers);
    q.display_text = std::move(text);
    qs.push_back(std::move(q));
  };

  add("smooth-or-featured", {"smooth", "featured-or-disk", "artifact"}, -1, {},
      "Is the galaxy simply smooth and rounded, with no sign of a disk?");          // q0
  add("disk-edge-on", {"yes", "no"}, 0, {1},
      "Could this be a disk viewed edge-on?");                                      // q1
  add("has-spiral-arms", {"yes", "no"}, 1, {1},
      "Is there any sign of a spiral arm pattern?");                                // q2
  add("bar", {"strong", "weak", "no"}, 1, {1},
      "Is there a bar feature through the centre of the galaxy?");                  // q3
  add("bulge-size", {"dominant", "large", "moderate", "small", "none"}, 1, {1},
      "How prominent is the central bulge?");                                       // q4
  add("how-rounded", {"round", "in-between", "cigar-shaped"}, 0, {0},
      "How rounded is it?");                                                        // q5
  add("edge-on-bulge", {"boxy", "none", "rounded"}, 1, {0},
      "Does the galaxy have a bulge at its centre? If so, what shape?");            // q6
  add("spiral-winding", {"tight", "medium", "loose"}, 2, {0},
      "How tightly wound do the spiral arms appear?");                              // q7
  add("spiral-arm-count", {"1", "2", "3", "4", "more-than-4", "cant-tell"}, 2, {0},
      "How many spiral arms are there?");                                           // q8
  add("merging", {"merger", "major-disturbance", "minor-disturbance", "none"}, 0, {0, 1},
      "Is the galaxy currently merging, or is there any sign of tidal debris?");    // q9

  DecisionTreeSchema schema(std::move(qs));
  if (schema.num_questions() != 10 || schema.total_answers() != 34 ||
      !validate_schema(schema).empty()) {
    // Built-in tree is wrong: fail fast.
    std::abort();
  }
  return schema;
}

std::vector<std::string> validate_schema(const DecisionTreeSchema& schema) {
  std::vector<std::string> violations;
  const auto& qs = schema.questions();
  const int n = schema.num_questions();

  std::set<std::string> qids;
  std::set<std::string> aids;
  int roots = 0;
  for (int q = 0; q < n; ++q) {
    if (qs[q].answers.empty())
      violations.push_back("question '" + qs[q].id + "' has no answer slots");
    if (!qids.insert(qs[q].id).second)
      violations.push_back("duplicate question id '" + qs[q].id + "'");
    for (const auto& a : qs[q].answers)
      if (!aids.insert(qs[q].id + "_" + a).second)
        violations.push_back("duplicate answer id '" + qs[q].id + "_" + a + "'");
    if (qs[q].parent_question < 0) {
      ++roots;
    } else {
      const int p = qs[q].parent_question;
      if (p >= n) {
        violations.push_back("question '" + qs[q].id + "' references missing parent");
      } else {
        if (qs[q].parent_answers.empty())
          violations.push_back("question '" + qs[q].id + "' has a parent but no triggering answer");
        for (int a : qs[q].parent_answers)
          if (a < 0 || a >= static_cast<int>(qs[p].answers.size()))
            violations.push_back("question '" + qs[q].id + "' triggering answer out of range");
      }
    }
  }
  if (roots != 1)
    violations.push_back("expected exactly one root question, found " + std::to_string(roots));

  // Cycle check: walk parents; a chain longer than n questions means a loop.
  for (int q = 0; q < n; ++q) {
    int cur = q;
    int steps = 0;
    while (cur >= 0 && cur < n && steps <= n) {
      cur = qs[cur].parent_question;
      ++steps;
    }
    if (steps > n) {
      violations.push_back("dependency cycle through question '" + qs[q].id + "'");
      break;
    }
  }

  // Slot index must cover 0..total-1 exactly once.
  std::set<int> slots;
  bool bijective = true;
  for (int q = 0; q < n; ++q)
    for (size_t a = 0; a < qs[q].answers.size(); ++a) {
      const int s = schema.slot_of(qs[q].id + "_" + qs[q].answers[a]);
      if (s < 0 || s >= schema.total_answers() || !slots.insert(s).second) bijective = false;
    }
  if (!bijective || static_cast<int>(slots.size()) != schema.total_answers())
    violations.push_back("slot index is not a bijection onto 0.." +
                         std::to_string(schema.total_answers() - 1));

  return violations;
}

}  // namespace morphbench
