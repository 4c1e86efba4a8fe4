#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "morphbench/schema.hpp"

using namespace morphbench;

TEST_CASE("gzd5 schema has the published question and slot layout") {
  const DecisionTreeSchema schema = build_gzd5_schema();
  REQUIRE(schema.num_questions() == 10);
  REQUIRE(schema.total_answers() == 34);

  const std::vector<std::pair<std::string, int>> expected = {
      {"smooth-or-featured", 3}, {"disk-edge-on", 2}, {"has-spiral-arms", 2},
      {"bar", 3},               {"bulge-size", 5},   {"how-rounded", 3},
      {"edge-on-bulge", 3},     {"spiral-winding", 3}, {"spiral-arm-count", 6},
      {"merging", 4}};
  int slot = 0;
  for (int q = 0; q < schema.num_questions(); ++q) {
    CHECK(schema.question(q).id == expected[static_cast<size_t>(q)].first);
    CHECK(schema.num_answers(q) == expected[static_cast<size_t>(q)].second);
    CHECK(schema.first_slot(q) == slot);
    slot += schema.num_answers(q);
  }
  CHECK(slot == 34);
}

TEST_CASE("slot bookkeeping is a bijection over 0..33") {
  const DecisionTreeSchema schema = build_gzd5_schema();
  std::set<std::string> ids;
  for (int s = 0; s < schema.total_answers(); ++s) {
    const std::string id = schema.answer_id(s);
    CHECK(schema.slot_of(id) == s);
    ids.insert(id);
    const int q = schema.question_of_slot(s);
    CHECK(schema.first_slot(q) <= s);
    CHECK(s < schema.first_slot(q) + schema.num_answers(q));
  }
  CHECK(ids.size() == 34);
  CHECK(schema.slot_of("no-such-answer") == -1);
}

TEST_CASE("tree structure: root and parent links") {
  const DecisionTreeSchema schema = build_gzd5_schema();
  CHECK(schema.root() == schema.question_index("smooth-or-featured"));
  CHECK(schema.question(schema.root()).parent_question == -1);

  // Every non-root question hangs off an earlier question through at least
  // one triggering answer.
  for (int q = 0; q < schema.num_questions(); ++q) {
    if (q == schema.root()) continue;
    const Question& question = schema.question(q);
    REQUIRE(question.parent_question >= 0);
    CHECK(question.parent_question < q);
    REQUIRE(!question.parent_answers.empty());
    for (int a : question.parent_answers) {
      CHECK(a >= 0);
      CHECK(a < schema.num_answers(question.parent_question));
    }
  }

  // Spot checks against the questionnaire: bar hangs off edge-on "no",
  // edge-on-bulge off edge-on "yes", spiral detail off has-spiral-arms
  // "yes", and merging is asked for every non-artifact root answer.
  const int edge_on = schema.question_index("disk-edge-on");
  CHECK(schema.question(schema.question_index("bar")).parent_question == edge_on);
  CHECK(schema.question(schema.question_index("edge-on-bulge")).parent_question == edge_on);
  CHECK(schema.question(schema.question_index("has-spiral-arms")).parent_question == edge_on);
  const int arms = schema.question_index("has-spiral-arms");
  CHECK(schema.question(schema.question_index("spiral-winding")).parent_question == arms);
  CHECK(schema.question(schema.question_index("spiral-arm-count")).parent_question == arms);
  const Question& merging = schema.question(schema.question_index("merging"));
  CHECK(merging.parent_question == schema.root());
  CHECK(merging.parent_answers == std::vector<int>{0, 1});
}

TEST_CASE("validate_schema accepts the built-in tree") {
  CHECK(validate_schema(build_gzd5_schema()).empty());
}

TEST_CASE("validate_schema flags a self-parent cycle") {
  std::vector<Question> questions;
  questions.push_back({"root", {"a", "b"}, -1, {}, ""});
  questions.push_back({"loop", {"x", "y"}, 1, {0}, ""});  // its own parent
  const DecisionTreeSchema schema{std::move(questions)};
  const std::vector<std::string> violations = validate_schema(schema);
  CHECK(!violations.empty());
  const bool mentions_cycle = std::any_of(
      violations.begin(), violations.end(),
      [](const std::string& v) { return v.find("cycle") != std::string::npos ||
                                        v.find("itself") != std::string::npos; });
  CHECK(mentions_cycle);
}

TEST_CASE("validate_schema flags duplicate roots and bad parent answers") {
  std::vector<Question> two_roots;
  two_roots.push_back({"first", {"a", "b"}, -1, {}, ""});
  two_roots.push_back({"second", {"x", "y"}, -1, {}, ""});
  CHECK(!validate_schema(DecisionTreeSchema{std::move(two_roots)}).empty());

  std::vector<Question> bad_answer;
  bad_answer.push_back({"root", {"a", "b"}, -1, {}, ""});
  bad_answer.push_back({"child", {"x", "y"}, 0, {7}, ""});  // answer 7 does not exist
  CHECK(!validate_schema(DecisionTreeSchema{std::move(bad_answer)}).empty());
}
