#include "clueqa/tokens.hpp"

#include <algorithm>

#include "clueqa/errors.hpp"

namespace clueqa {

Vocabulary Vocabulary::build(const WorldConfig& world) {
  world.validate();
  Vocabulary v;
  v.max_frames_ = world.num_frames;
  v.id_base_index_ = kFirstMarker + (int)question_marker_words().size();
  v.id_base_words_ = v.id_base_index_ + v.max_frames_;
  for (const auto& w : entity_names(world)) v.words_.push_back(w);
  for (const auto& w : predicate_names(world)) v.words_.push_back(w);
  v.num_entities_ = world.num_entities;
  return v;
}

int Vocabulary::index_token(int frame) const {
  if (frame < 0 || frame >= max_frames_) {
    throw ContractError("frame index " + std::to_string(frame) +
                        " outside token range");
  }
  return id_base_index_ + frame;
}

bool Vocabulary::is_index(int id) const {
  return id >= id_base_index_ && id < id_base_words_;
}

int Vocabulary::index_value(int id) const {
  if (!is_index(id)) throw ContractError("not a frame-index token");
  return id - id_base_index_;
}

int Vocabulary::word_token(const std::string& word) const {
  const auto& markers = question_marker_words();
  for (size_t i = 0; i < markers.size(); ++i) {
    if (markers[i] == word) return kFirstMarker + (int)i;
  }
  for (size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] == word) return id_base_words_ + (int)i;
  }
  throw ContractError("word '" + word + "' not in vocabulary");
}

bool Vocabulary::is_word(int id) const {
  return id >= id_base_words_ && id < size();
}

const std::string& Vocabulary::word_of(int id) const {
  if (!is_word(id)) throw ContractError("token is not a vocabulary word");
  return words_[id - id_base_words_];
}

std::string Vocabulary::token_name(int id) const {
  switch (id) {
    case kVisual: return "[VIS]";
    case kEos: return "[EOS]";
    case kSecVisual: return "[SEC_VIS]";
    case kSecPrompt: return "[SEC_PROMPT]";
    case kSecClue: return "[SEC_CLUE]";
    case kSecQuestion: return "[SEC_Q]";
    case kSecAnswer: return "[SEC_A]";
    case kExtract: return "[EXTRACT]";
    case kSpanOpen: return "<";
    case kSpanClose: return ">";
    case kDash: return "-";
    case kClueSep: return "[SEP]";
    default: break;
  }
  const auto& markers = question_marker_words();
  if (id >= kFirstMarker && id < kFirstMarker + (int)markers.size()) {
    return markers[id - kFirstMarker];
  }
  if (is_index(id)) return "idx" + std::to_string(index_value(id));
  if (is_word(id)) return word_of(id);
  return "<bad:" + std::to_string(id) + ">";
}

std::vector<int> Vocabulary::encode_clue(const Clue& clue) const {
  if (clue.t_start < 0 || clue.t_end >= max_frames_ ||
      clue.t_start > clue.t_end) {
    throw ContractError("clue lifespan outside token range: " +
                        render_clue(clue));
  }
  return {kSpanOpen,
          index_token(clue.t_start),
          kDash,
          index_token(clue.t_end),
          kSpanClose,
          word_token(clue.subject),
          word_token(clue.predicate),
          word_token(clue.object)};
}

std::optional<Clue> Vocabulary::decode_clue(const std::vector<int>& b) const {
  if (b.size() != kClueTokens) return std::nullopt;
  if (b[0] != kSpanOpen || b[2] != kDash || b[4] != kSpanClose) {
    return std::nullopt;
  }
  if (!is_index(b[1]) || !is_index(b[3])) return std::nullopt;
  if (!is_word(b[5]) || !is_word(b[6]) || !is_word(b[7])) return std::nullopt;
  Clue c;
  c.t_start = index_value(b[1]);
  c.t_end = index_value(b[3]);
  if (c.t_start > c.t_end) return std::nullopt;
  c.subject = word_of(b[5]);
  c.predicate = word_of(b[6]);
  c.object = word_of(b[7]);
  return c;
}

std::vector<int> Vocabulary::encode_words(
    const std::vector<std::string>& words) const {
  std::vector<int> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(word_token(w));
  return out;
}

void TokenSequence::push(int id, SegmentTag tag, int slot, double scale) {
  ids.push_back(id);
  tags.push_back(tag);
  slots.push_back(slot);
  scales.push_back(scale);
}

void TokenSequence::check(int vocab_size, int num_slots) const {
  if (ids.size() != tags.size() || ids.size() != slots.size() ||
      ids.size() != scales.size()) {
    throw ContractError("token sequence arrays out of sync");
  }
  for (int p = 0; p < size(); ++p) {
    if (ids[p] < 0 || ids[p] >= vocab_size) {
      throw ContractError("token id out of range at position " +
                          std::to_string(p));
    }
    bool visual_slot = slots[p] >= 0;
    if (visual_slot != (ids[p] == Vocabulary::kVisual)) {
      throw ContractError("slot/id mismatch at position " + std::to_string(p));
    }
    if (visual_slot && slots[p] >= num_slots) {
      throw ContractError("slot index out of range at position " +
                          std::to_string(p));
    }
    if (!(scales[p] >= 0.0) || !(scales[p] <= 1e6)) {
      throw ContractError("bad embedding scale at position " +
                          std::to_string(p));
    }
  }
}

namespace {

void push_visual_block(const Vocabulary& /*vocab*/, TokenSequence* seq,
                       const std::vector<int>& slots) {
  seq->push(Vocabulary::kSecVisual, SegmentTag::kVisual);
  for (int s : slots) {
    seq->push(Vocabulary::kVisual, SegmentTag::kVisual, s);
  }
}

std::vector<int> iota_slots(int n) {
  std::vector<int> s(n);
  for (int i = 0; i < n; ++i) s[i] = i;
  return s;
}

}  // namespace

ClueGenSequence build_clue_gen_prefix(const Vocabulary& vocab, int num_slots) {
  if (num_slots <= 0) throw ContractError("clue generation needs visual slots");
  ClueGenSequence out;
  push_visual_block(vocab, &out.seq, iota_slots(num_slots));
  out.seq.push(Vocabulary::kSecPrompt, SegmentTag::kPrompt);
  out.seq.push(Vocabulary::kExtract, SegmentTag::kPrompt);
  out.seq.push(Vocabulary::kSecClue, SegmentTag::kClue);
  out.target = {out.seq.size(), out.seq.size()};
  return out;
}

ClueGenSequence build_clue_gen_training(const Vocabulary& vocab, int num_slots,
                                        const std::vector<Clue>& clues) {
  ClueGenSequence out = build_clue_gen_prefix(vocab, num_slots);
  out.target.begin = out.seq.size();
  for (size_t i = 0; i < clues.size(); ++i) {
    if (i > 0) out.seq.push(Vocabulary::kClueSep, SegmentTag::kClue);
    for (int id : vocab.encode_clue(clues[i])) {
      if (vocab.is_index(id) && vocab.index_value(id) >= num_slots) {
        throw ContractError("clue lifespan exceeds provided visual slots");
      }
      out.seq.push(id, SegmentTag::kClue);
    }
  }
  out.seq.push(Vocabulary::kEos, SegmentTag::kClue);
  out.target.end = out.seq.size();
  return out;
}

AnswerSequence build_answer_sequence(const Vocabulary& vocab,
                                     bool with_clue_section,
                                     const std::vector<Clue>& clues,
                                     const std::vector<double>& clue_scales,
                                     const std::vector<int>& slots,
                                     const std::vector<std::string>& question,
                                     const std::string& answer_word,
                                     bool with_answer_section) {
  if (with_clue_section && !clue_scales.empty() &&
      clue_scales.size() != clues.size()) {
    throw ContractError("clue scale count differs from clue count");
  }
  if (question.empty()) throw ContractError("question is empty");

  AnswerSequence out;
  if (with_clue_section) {
    out.seq.push(Vocabulary::kSecClue, SegmentTag::kClue);
    for (size_t i = 0; i < clues.size(); ++i) {
      if (i > 0) out.seq.push(Vocabulary::kClueSep, SegmentTag::kClue);
      double scale = clue_scales.empty() ? 1.0 : clue_scales[i];
      TokenSpan span{out.seq.size(), 0};
      for (int id : vocab.encode_clue(clues[i])) {
        out.seq.push(id, SegmentTag::kClue, -1, scale);
      }
      span.end = out.seq.size();
      out.clue_spans.push_back(span);
    }
  }
  push_visual_block(vocab, &out.seq, slots);
  out.seq.push(Vocabulary::kSecQuestion, SegmentTag::kQuestion);
  out.question.begin = out.seq.size();
  for (int id : vocab.encode_words(question)) {
    out.seq.push(id, SegmentTag::kQuestion);
  }
  out.question.end = out.seq.size();
  if (with_answer_section) {
    out.answer_marker = out.seq.size();
    out.seq.push(Vocabulary::kSecAnswer, SegmentTag::kAnswer);
    if (!answer_word.empty()) {
      out.target.begin = out.seq.size();
      out.seq.push(vocab.word_token(answer_word), SegmentTag::kAnswer);
      out.seq.push(Vocabulary::kEos, SegmentTag::kAnswer);
      out.target.end = out.seq.size();
    }
  }
  return out;
}

std::vector<Clue> decode_clue_stream(const Vocabulary& vocab,
                                     const std::vector<int>& ids,
                                     int num_slots, int* rejected) {
  std::vector<Clue> out;
  int bad = 0;
  std::vector<int> block;
  auto flush = [&]() {
    if (block.empty()) return;
    auto clue = vocab.decode_clue(block);
    if (clue && clue->t_end < num_slots) {
      out.push_back(*clue);
    } else {
      ++bad;
    }
    block.clear();
  };
  for (int id : ids) {
    if (id == Vocabulary::kEos) break;
    if (id == Vocabulary::kClueSep) {
      flush();
    } else {
      block.push_back(id);
    }
  }
  flush();
  if (rejected) *rejected = bad;
  return out;
}

}  // namespace clueqa
