#include <set>
#include <string>
#include <vector>

#include "clueqa/rng.hpp"
#include "clueqa/tokens.hpp"
#include "doctest.h"

using namespace clueqa;

namespace {

WorldConfig tiny_world() {
  WorldConfig cfg;
  cfg.num_entities = 4;
  cfg.num_predicates = 3;
  cfg.num_frames = 8;
  return cfg;
}

}  // namespace

TEST_CASE("vocabulary layout is a fixed function of the world") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  CHECK(v == Vocabulary::build(cfg));
  CHECK(v.max_frames() == 8);
  // 12 structural ids + 7 markers + 8 frame indices + 4 entities + 3 predicates.
  CHECK(v.size() == 12 + 7 + 8 + 4 + 3);

  // Frame-index block.
  for (int f = 0; f < 8; ++f) {
    int id = v.index_token(f);
    CHECK(v.is_index(id));
    CHECK(v.index_value(id) == f);
    CHECK_FALSE(v.is_word(id));
  }
  CHECK_THROWS_AS(v.index_token(8), ContractError);
  CHECK_THROWS_AS(v.index_token(-1), ContractError);

  // Marker words tokenize but are not content words.
  for (const auto& m : question_marker_words()) {
    int id = v.word_token(m);
    CHECK(id >= Vocabulary::kFirstMarker);
    CHECK_FALSE(v.is_word(id));
  }
  // Content words round trip.
  for (const auto& w : entity_names(cfg)) {
    int id = v.word_token(w);
    CHECK(v.is_word(id));
    CHECK(v.word_of(id) == w);
  }
  for (const auto& w : predicate_names(cfg)) {
    int id = v.word_token(w);
    CHECK(v.is_word(id));
    CHECK(v.word_of(id) == w);
  }
  CHECK_THROWS_AS(v.word_token("no-such-word"), ContractError);
}

TEST_CASE("token names are distinct and human readable") {
  Vocabulary v = Vocabulary::build(tiny_world());
  std::set<std::string> names;
  for (int id = 0; id < v.size(); ++id) names.insert(v.token_name(id));
  CHECK((int)names.size() == v.size());
}

TEST_CASE("clue blocks encode to exactly eight tokens and decode back") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  auto ents = entity_names(cfg);
  auto preds = predicate_names(cfg);
  Clue c{2, 4, ents[0], preds[1], ents[2]};
  std::vector<int> block = v.encode_clue(c);
  REQUIRE((int)block.size() == Vocabulary::kClueTokens);
  CHECK(block[0] == Vocabulary::kSpanOpen);
  CHECK(block[1] == v.index_token(2));
  CHECK(block[2] == Vocabulary::kDash);
  CHECK(block[3] == v.index_token(4));
  CHECK(block[4] == Vocabulary::kSpanClose);
  CHECK(block[5] == v.word_token(ents[0]));
  CHECK(block[6] == v.word_token(preds[1]));
  CHECK(block[7] == v.word_token(ents[2]));
  auto back = v.decode_clue(block);
  REQUIRE(back.has_value());
  CHECK(*back == c);
}

TEST_CASE("clue encode round trips over the whole grid") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  auto ents = entity_names(cfg);
  auto preds = predicate_names(cfg);
  for (int a = 0; a < cfg.num_frames; ++a)
    for (int b = a; b < cfg.num_frames; ++b) {
      Clue c{a, b, ents[a % 4], preds[b % 3], ents[(a + 1) % 4]};
      auto back = v.decode_clue(v.encode_clue(c));
      REQUIRE(back.has_value());
      CHECK(*back == c);
    }
  // Out-of-range times cannot encode.
  CHECK_THROWS_AS(v.encode_clue({0, cfg.num_frames, ents[0], preds[0], ents[1]}),
                  ContractError);
  CHECK_THROWS_AS(v.encode_clue({0, 1, "stranger", preds[0], ents[1]}),
                  ContractError);
}

TEST_CASE("decode_clue rejects malformed blocks") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  auto ents = entity_names(cfg);
  auto preds = predicate_names(cfg);
  std::vector<int> good = v.encode_clue({1, 3, ents[0], preds[0], ents[1]});

  auto mutate = [&](int pos, int id) {
    std::vector<int> b = good;
    b[pos] = id;
    return b;
  };
  CHECK_FALSE(v.decode_clue(mutate(0, Vocabulary::kSpanClose)).has_value());
  CHECK_FALSE(v.decode_clue(mutate(1, Vocabulary::kEos)).has_value());
  CHECK_FALSE(v.decode_clue(mutate(2, Vocabulary::kSpanOpen)).has_value());
  CHECK_FALSE(v.decode_clue(mutate(4, Vocabulary::kDash)).has_value());
  CHECK_FALSE(v.decode_clue(mutate(5, Vocabulary::kExtract)).has_value());
  // Field positions accept any vocabulary word: the token layer does not
  // police entity/predicate categories, only structure.
  auto swapped = v.decode_clue(mutate(6, v.word_token(ents[0])));
  REQUIRE(swapped.has_value());
  CHECK(swapped->predicate == ents[0]);
  // Reversed interval.
  std::vector<int> rev = good;
  std::swap(rev[1], rev[3]);
  CHECK_FALSE(v.decode_clue(rev).has_value());
  // Wrong length.
  std::vector<int> short_block(good.begin(), good.end() - 1);
  CHECK_FALSE(v.decode_clue(short_block).has_value());
  std::vector<int> long_block = good;
  long_block.push_back(Vocabulary::kEos);
  CHECK_FALSE(v.decode_clue(long_block).has_value());
  CHECK(v.decode_clue(good).has_value());
}

TEST_CASE("token sequence push and check") {
  Vocabulary v = Vocabulary::build(tiny_world());
  TokenSequence seq;
  seq.push(Vocabulary::kSecVisual, SegmentTag::kVisual);
  seq.push(Vocabulary::kVisual, SegmentTag::kVisual, 3, 1.0);
  seq.push(Vocabulary::kEos, SegmentTag::kAnswer);
  REQUIRE(seq.size() == 3);
  CHECK(seq.slots[1] == 3);
  CHECK_NOTHROW(seq.check(v.size(), 8));
  CHECK_THROWS_AS(seq.check(v.size(), 3), ContractError);  // slot 3 needs 4
  TokenSequence bad;
  bad.push(v.size(), SegmentTag::kPrompt);
  CHECK_THROWS_AS(bad.check(v.size(), 8), ContractError);
}

TEST_CASE("clue-gen prefix layout") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  int m = 5;
  ClueGenSequence g = build_clue_gen_prefix(v, m);
  REQUIRE(g.seq.size() == 1 + m + 3);
  CHECK(g.seq.ids[0] == Vocabulary::kSecVisual);
  for (int i = 0; i < m; ++i) {
    CHECK(g.seq.ids[1 + i] == Vocabulary::kVisual);
    CHECK(g.seq.slots[1 + i] == i);
    CHECK(g.seq.tags[1 + i] == SegmentTag::kVisual);
  }
  CHECK(g.seq.ids[1 + m] == Vocabulary::kSecPrompt);
  CHECK(g.seq.ids[2 + m] == Vocabulary::kExtract);
  CHECK(g.seq.ids[3 + m] == Vocabulary::kSecClue);
  CHECK(g.target.length() == 0);
  CHECK_NOTHROW(g.seq.check(v.size(), m));
}

TEST_CASE("clue-gen training form appends separated clues and EOS") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  auto ents = entity_names(cfg);
  auto preds = predicate_names(cfg);
  std::vector<Clue> clues = {{0, 2, ents[0], preds[0], ents[1]},
                             {3, 5, ents[2], preds[1], ents[3]}};
  int m = 6;
  ClueGenSequence g = build_clue_gen_training(v, m, clues);
  ClueGenSequence prefix = build_clue_gen_prefix(v, m);
  // Training form extends the prefix.
  REQUIRE(g.seq.size() == prefix.seq.size() + 2 * 8 + 1 + 1);
  for (int i = 0; i < prefix.seq.size(); ++i)
    CHECK(g.seq.ids[i] == prefix.seq.ids[i]);
  CHECK(g.target.begin == prefix.seq.size());
  CHECK(g.target.end == g.seq.size());
  // Appended region: clue blocks joined by [CLUE_SEP], then [EOS].
  std::vector<int> tail(g.seq.ids.begin() + g.target.begin, g.seq.ids.end());
  std::vector<int> expect = v.encode_clue(clues[0]);
  expect.push_back(Vocabulary::kClueSep);
  for (int id : v.encode_clue(clues[1])) expect.push_back(id);
  expect.push_back(Vocabulary::kEos);
  CHECK(tail == expect);
  for (int i = g.target.begin; i < g.target.end; ++i)
    CHECK(g.seq.tags[i] == SegmentTag::kClue);
  // Empty clue list still trains toward a bare EOS.
  ClueGenSequence empty = build_clue_gen_training(v, m, {});
  CHECK(empty.target.length() == 1);
  CHECK(empty.seq.ids.back() == Vocabulary::kEos);
}

TEST_CASE("answer sequence layout, spans and scales") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  auto ents = entity_names(cfg);
  auto preds = predicate_names(cfg);
  std::vector<Clue> clues = {{0, 1, ents[0], preds[0], ents[1]},
                             {2, 4, ents[1], preds[2], ents[0]}};
  std::vector<double> scales = {0.25, 0.75};
  std::vector<int> slots = {1, 3, 4};
  std::vector<std::string> question = {"desc", ents[0], preds[0]};

  AnswerSequence a = build_answer_sequence(v, true, clues, scales, slots,
                                           question, ents[1], true);
  CHECK_NOTHROW(a.seq.check(v.size(), 8));

  // Clue spans decode back to their source clues, and carry the gate scale.
  REQUIRE(a.clue_spans.size() == 2);
  for (size_t i = 0; i < clues.size(); ++i) {
    const TokenSpan& s = a.clue_spans[i];
    std::vector<int> block(a.seq.ids.begin() + s.begin,
                           a.seq.ids.begin() + s.end);
    auto back = v.decode_clue(block);
    REQUIRE(back.has_value());
    CHECK(*back == clues[i]);
    for (int p = s.begin; p < s.end; ++p) {
      CHECK(a.seq.scales[p] == scales[i]);
      CHECK(a.seq.tags[p] == SegmentTag::kClue);
    }
  }
  // Structural tokens around the clue content keep scale 1.
  CHECK(a.seq.ids[0] == Vocabulary::kSecClue);
  CHECK(a.seq.scales[0] == 1.0);

  // Visual block lists exactly the requested slots, in order.
  std::vector<int> seen;
  for (int p = 0; p < a.seq.size(); ++p)
    if (a.seq.slots[p] >= 0) seen.push_back(a.seq.slots[p]);
  CHECK(seen == slots);

  // Question span covers the question words.
  REQUIRE(a.question.length() == 3);
  for (int p = a.question.begin, i = 0; p < a.question.end; ++p, ++i)
    CHECK(a.seq.ids[p] == v.word_token(question[i]));

  // Target is [answer, EOS] right after the answer marker.
  REQUIRE(a.answer_marker >= 0);
  CHECK(a.seq.ids[a.answer_marker] == Vocabulary::kSecAnswer);
  REQUIRE(a.target.length() == 2);
  CHECK(a.target.begin == a.answer_marker + 1);
  CHECK(a.seq.ids[a.target.begin] == v.word_token(ents[1]));
  CHECK(a.seq.ids[a.target.begin + 1] == Vocabulary::kEos);
  CHECK(a.seq.size() == a.target.end);
}

TEST_CASE("answer sequence variants") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  auto ents = entity_names(cfg);
  auto preds = predicate_names(cfg);
  std::vector<Clue> clues = {{0, 1, ents[0], preds[0], ents[1]}};
  std::vector<std::string> q = {"seqf"};

  // Clue-free control drops the clue section entirely.
  AnswerSequence bare =
      build_answer_sequence(v, false, {}, {}, {0, 1}, q, ents[0], true);
  CHECK(bare.clue_spans.empty());
  CHECK(bare.seq.ids[0] == Vocabulary::kSecVisual);
  for (int id : bare.seq.ids) CHECK(id != Vocabulary::kSecClue);

  // Scoring prefix: no answer section at all.
  AnswerSequence prefix =
      build_answer_sequence(v, true, clues, {1.0}, {0}, q, "", false);
  CHECK(prefix.answer_marker == -1);
  CHECK(prefix.target.length() == 0);
  for (int id : prefix.seq.ids) CHECK(id != Vocabulary::kSecAnswer);

  // Decode prefix: answer marker present, nothing after it.
  AnswerSequence open =
      build_answer_sequence(v, true, clues, {1.0}, {0}, q, "", true);
  CHECK(open.answer_marker == open.seq.size() - 1);
  CHECK(open.target.length() == 0);

  // Scale list must match the clue list.
  CHECK_THROWS_AS(
      build_answer_sequence(v, true, clues, {0.5, 0.5}, {0}, q, "", true),
      ContractError);
  // With the clue section off, any clues passed are simply not emitted.
  AnswerSequence off =
      build_answer_sequence(v, false, clues, {1.0}, {0}, q, "", true);
  CHECK(off.clue_spans.empty());
  for (int id : off.seq.ids) CHECK(id != Vocabulary::kSecClue);
}

TEST_CASE("decode_clue_stream splits on separators and counts rejects") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  auto ents = entity_names(cfg);
  auto preds = predicate_names(cfg);
  Clue c1{0, 2, ents[0], preds[0], ents[1]};
  Clue c2{3, 5, ents[2], preds[1], ents[0]};
  Clue c3{6, 7, ents[1], preds[2], ents[3]};

  auto cat = [&](std::initializer_list<std::vector<int>> parts) {
    std::vector<int> out;
    bool first = true;
    for (const auto& p : parts) {
      if (!first) out.push_back(Vocabulary::kClueSep);
      first = false;
      for (int id : p) out.push_back(id);
    }
    return out;
  };

  int rejected = -1;
  auto ids = cat({v.encode_clue(c1), v.encode_clue(c2), v.encode_clue(c3)});
  auto clues = decode_clue_stream(v, ids, cfg.num_frames, &rejected);
  CHECK(clues == std::vector<Clue>{c1, c2, c3});
  CHECK(rejected == 0);

  // A corrupt middle block is dropped; the rest still decodes.
  auto mid = v.encode_clue(c2);
  mid[4] = Vocabulary::kDash;
  clues = decode_clue_stream(v, cat({v.encode_clue(c1), mid, v.encode_clue(c3)}),
                             cfg.num_frames, &rejected);
  CHECK(clues == std::vector<Clue>{c1, c3});
  CHECK(rejected == 1);

  // Clues whose end time exceeds the advertised slot count are rejected.
  clues = decode_clue_stream(v, cat({v.encode_clue(c1), v.encode_clue(c3)}), 4,
                             &rejected);
  CHECK(clues == std::vector<Clue>{c1});
  CHECK(rejected == 1);

  // EOS stops the scan; trailing garbage after it is ignored.
  auto with_eos = cat({v.encode_clue(c1)});
  with_eos.push_back(Vocabulary::kEos);
  with_eos.push_back(Vocabulary::kDash);
  with_eos.push_back(Vocabulary::kDash);
  clues = decode_clue_stream(v, with_eos, cfg.num_frames, &rejected);
  CHECK(clues == std::vector<Clue>{c1});
  CHECK(rejected == 0);

  // Empty stream and lone EOS both decode to nothing.
  CHECK(decode_clue_stream(v, {}, cfg.num_frames, &rejected).empty());
  CHECK(rejected == 0);
  CHECK(decode_clue_stream(v, {Vocabulary::kEos}, cfg.num_frames, &rejected)
            .empty());
  CHECK(rejected == 0);

  // Null rejected pointer is allowed.
  CHECK_NOTHROW(decode_clue_stream(v, ids, cfg.num_frames, nullptr));
}

TEST_CASE("encode_words maps question text to marker and word ids") {
  WorldConfig cfg = tiny_world();
  Vocabulary v = Vocabulary::build(cfg);
  auto ents = entity_names(cfg);
  std::vector<std::string> q = {"tempa", ents[0], predicate_names(cfg)[0],
                                ents[1]};
  auto ids = v.encode_words(q);
  REQUIRE(ids.size() == 4);
  for (size_t i = 0; i < q.size(); ++i) CHECK(v.token_name(ids[i]) == q[i]);
  CHECK_THROWS_AS(v.encode_words({"nope"}), ContractError);
}
