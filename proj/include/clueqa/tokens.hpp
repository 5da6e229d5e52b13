#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clueqa/clue.hpp"
#include "clueqa/world.hpp"

namespace clueqa {

// Token vocabulary of the reasoning model. Layout is a fixed function of
// (max_frames, entity words, predicate words):
//
//   0                 [VIS]      placeholder id carried by visual positions
//   1                 [EOS]
//   2..6              section markers (visual / prompt / clue / question /
//                     answer)
//   7                 [EXTRACT]  clue-extraction task prompt
//   8..11             clue structure: "<", ">", "-", clue separator
//   12..18            question markers (desc inter tempa tempb cause seqf
//                     seql)
//   19..19+F-1        frame-index tokens for frames 0..F-1
//   then              entity words, then predicate words
class Vocabulary {
 public:
  enum : int {
    kVisual = 0,
    kEos = 1,
    kSecVisual = 2,
    kSecPrompt = 3,
    kSecClue = 4,
    kSecQuestion = 5,
    kSecAnswer = 6,
    kExtract = 7,
    kSpanOpen = 8,
    kSpanClose = 9,
    kDash = 10,
    kClueSep = 11,
    kFirstMarker = 12,
  };

  static Vocabulary build(const WorldConfig& world);

  int size() const { return id_base_words_ + (int)words_.size(); }
  int max_frames() const { return max_frames_; }

  int index_token(int frame) const;      // frame-index token id
  bool is_index(int id) const;
  int index_value(int id) const;         // inverse of index_token

  int word_token(const std::string& word) const;  // markers + words
  bool is_word(int id) const;                     // entity/predicate words
  const std::string& word_of(int id) const;

  // Human-readable name of any token id (for traces and errors).
  std::string token_name(int id) const;

  // Clue <-> token block. The 8-token form is
  //   [<] [idx a] [-] [idx b] [>] [subject] [predicate] [object]
  static constexpr int kClueTokens = 8;
  std::vector<int> encode_clue(const Clue& clue) const;
  // Strict decode of one 8-token block; nullopt if the shape is wrong.
  std::optional<Clue> decode_clue(const std::vector<int>& block) const;

  std::vector<int> encode_words(const std::vector<std::string>& words) const;

  bool operator==(const Vocabulary&) const = default;

 private:
  int max_frames_ = 0;
  int id_base_index_ = 0;  // first frame-index id
  int id_base_words_ = 0;  // first entity id
  std::vector<std::string> words_;  // entities then predicates
  int num_entities_ = 0;
};

enum class SegmentTag : uint8_t {
  kVisual = 0,
  kPrompt = 1,
  kClue = 2,
  kQuestion = 3,
  kAnswer = 4,
};

// A model input sequence: token ids plus per-position metadata. Visual
// positions carry id kVisual and a slot index addressing a column of the
// visual embedding matrix; every position carries a segment tag and a scale
// multiplier applied to its content embedding (the clue-gating hook; 1.0
// everywhere else).
struct TokenSequence {
  std::vector<int> ids;
  std::vector<SegmentTag> tags;
  std::vector<int> slots;       // visual slot or -1
  std::vector<double> scales;   // content-embedding multipliers

  int size() const { return (int)ids.size(); }
  void push(int id, SegmentTag tag, int slot = -1, double scale = 1.0);
  void check(int vocab_size, int num_slots) const;  // throws ContractError
};

// Span of token positions [begin, end).
struct TokenSpan {
  int begin = 0;
  int end = 0;
  int length() const { return end - begin; }
};

// Clue-extraction layout:
//   [SEC_VIS] v0..v{m-1} [SEC_PROMPT] [EXTRACT] [SEC_CLUE] (clues [EOS])
// The prefix form stops after [SEC_CLUE]; the training form appends the
// target clues (separated by [CLUE_SEP]) and [EOS], with target covering
// the appended tokens.
struct ClueGenSequence {
  TokenSequence seq;
  TokenSpan target;  // clue tokens plus EOS (training form only)
};
ClueGenSequence build_clue_gen_prefix(const Vocabulary& vocab, int num_slots);
ClueGenSequence build_clue_gen_training(const Vocabulary& vocab, int num_slots,
                                        const std::vector<Clue>& clues);

// Answer layout:
//   [SEC_CLUE] c0 [SEP] c1 ... [SEC_VIS] v... [SEC_QUESTION] q
//   ([SEC_ANSWER] a [EOS])
// with_clue_section=false drops the leading clue block (clue-free control).
// Slots lists which visual slots appear (post-compression subset). Answer
// word may be empty to stop after [SEC_ANSWER] (scoring/decoding prefix).
struct AnswerSequence {
  TokenSequence seq;
  std::vector<TokenSpan> clue_spans;  // content tokens of each clue
  TokenSpan question;                 // question word positions
  TokenSpan target;                   // answer token plus EOS, if present
  int answer_marker = -1;             // position of [SEC_ANSWER], -1 if absent
};
AnswerSequence build_answer_sequence(const Vocabulary& vocab,
                                     bool with_clue_section,
                                     const std::vector<Clue>& clues,
                                     const std::vector<double>& clue_scales,
                                     const std::vector<int>& slots,
                                     const std::vector<std::string>& question,
                                     const std::string& answer_word,
                                     bool with_answer_section);

// Splits a generated id stream on [CLUE_SEP], strictly decoding each block.
// Returns decoded clues; counts blocks that failed to decode or violated
// the slot range in *rejected (may be null).
std::vector<Clue> decode_clue_stream(const Vocabulary& vocab,
                                     const std::vector<int>& ids,
                                     int num_slots, int* rejected);

}  // namespace clueqa
