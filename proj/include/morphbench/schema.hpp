#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace morphbench {

// One node of the volunteer decision tree. A question is asked when the
// volunteer picked one of `parent_answers` on question `parent_question`;
// the root has parent_question == -1.
struct Question {
  std::string id;
  std::vector<std::string> answers;  // local answer names, e.g. "smooth"
  int parent_question = -1;
  std::vector<int> parent_answers;  // answer indices within the parent question
  std::string display_text;
};

// The GZD-5 questionnaire: 10 questions, 34 answer slots laid out as one flat
// vector in fixed question order. Immutable after construction; safe to share
// across threads.
class DecisionTreeSchema {
 public:
  explicit DecisionTreeSchema(std::vector<Question> questions);

  int num_questions() const { return static_cast<int>(questions_.size()); }
  int total_answers() const { return total_answers_; }
  const std::vector<Question>& questions() const { return questions_; }
  const Question& question(int q) const { return questions_[q]; }

  // Flat-vector slot range [first, first+count) for question q.
  int first_slot(int q) const { return first_slot_[q]; }
  int num_answers(int q) const { return static_cast<int>(questions_[q].answers.size()); }
  int question_of_slot(int slot) const { return question_of_slot_[slot]; }

  // Globally unique slot id, "<question>_<answer>".
  std::string answer_id(int slot) const;
  // -1 when the id is unknown.
  int slot_of(const std::string& answer_id) const;
  int question_index(const std::string& question_id) const;

  int root() const { return root_; }

 private:
  std::vector<Question> questions_;
  std::vector<int> first_slot_;
  std::vector<int> question_of_slot_;
  std::unordered_map<std::string, int> slot_index_;
  std::unordered_map<std::string, int> question_index_;
  int total_answers_ = 0;
  int root_ = -1;
};

// The built-in GZD-5 tree (10 questions, 34 slots). Asserts its own
// consistency; a transcription error aborts instead of corrupting training.
DecisionTreeSchema build_gzd5_schema();

// Structural checks: acyclicity, single root, slot-index bijectivity,
// non-empty and unique ids, valid parent references. Violations are data,
// not failures; an empty list means the schema is valid.
std::vector<std::string> validate_schema(const DecisionTreeSchema& schema);

}  // namespace morphbench
