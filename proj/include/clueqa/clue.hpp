#pragma once

#include <string>
#include <vector>

#include "clueqa/errors.hpp"

namespace clueqa {

// A single spatio-temporal clue: a subject-predicate-object triple grounded
// to an inclusive frame interval [t_start, t_end].
struct Clue {
  int t_start = 0;
  int t_end = 0;
  std::string subject;
  std::string predicate;
  std::string object;

  bool operator==(const Clue&) const = default;
};

// True iff tok is usable as a clue field: nonempty, no whitespace, no '<',
// '>' or '-' (those are structural characters of the text form).
bool is_valid_clue_token(const std::string& tok);

// Canonical text form: "<{t_start}-{t_end}> {subject} {predicate} {object}".
// Throws ValidationError on negative times, t_start > t_end, or invalid
// field tokens.
std::string render_clue(const Clue& clue);

// Inverse of render_clue. Accepts exactly the canonical form (single spaces,
// no padding, base-10 times without signs or leading zeros beyond "0").
// Throws ParseError with a position hint on any deviation.
Clue parse_clue(const std::string& line);

// An episode's worth of clues plus the video context they are grounded in.
struct ClueCollection {
  std::vector<Clue> clues;
  std::string video_id;
  int num_frames = 0;

  // Sort clues by (t_start, t_end, subject, predicate, object).
  void normalize();

  // Checks every clue lies within [0, num_frames) and has valid fields.
  // Throws ValidationError naming the offending clue index.
  void validate() const;

  bool operator==(const ClueCollection&) const = default;
};

// Indices (into collection.clues) of clues whose lifespan covers frame t,
// in stored order. Throws ValidationError if t is outside [0, num_frames).
std::vector<int> covering_clues(const ClueCollection& collection, int t);

// Render a collection one clue per line (stored order, trailing newline per
// line). parse_clue_lines is the inverse for the same text block.
std::string render_clue_lines(const std::vector<Clue>& clues);
std::vector<Clue> parse_clue_lines(const std::string& text);

}  // namespace clueqa
