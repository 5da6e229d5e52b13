#include "clueqa/clue.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace clueqa {

namespace {

bool is_structural(char c) {
  return c == '<' || c == '>' || c == '-' || c == ' ' || c == '\t' ||
         c == '\n' || c == '\r';
}

// Parses a non-negative base-10 integer at text[pos...]; advances pos past
// it. Rejects empty digits runs, leading zeros ("07"), and values that
// overflow int.
int parse_time(const std::string& text, size_t& pos, const char* what) {
  size_t start = pos;
  while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  if (pos == start) {
    throw ParseError(std::string("expected digit for ") + what +
                     " at position " + std::to_string(start));
  }
  if (text[start] == '0' && pos - start > 1) {
    throw ParseError(std::string("leading zero in ") + what + " at position " +
                     std::to_string(start));
  }
  long long value = 0;
  for (size_t i = start; i < pos; ++i) {
    value = value * 10 + (text[i] - '0');
    if (value > 1000000000LL) {
      throw ParseError(std::string(what) + " out of range at position " +
                       std::to_string(start));
    }
  }
  return static_cast<int>(value);
}

void expect_char(const std::string& text, size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw ParseError(std::string("expected '") + c + "' at position " +
                     std::to_string(pos));
  }
  ++pos;
}

std::string parse_field(const std::string& text, size_t& pos,
                        const char* what) {
  size_t start = pos;
  while (pos < text.size() && !is_structural(text[pos])) ++pos;
  if (pos == start) {
    throw ParseError(std::string("expected ") + what + " at position " +
                     std::to_string(start));
  }
  return text.substr(start, pos - start);
}

}  // namespace

bool is_valid_clue_token(const std::string& tok) {
  if (tok.empty()) return false;
  for (char c : tok) {
    if (is_structural(c)) return false;
  }
  return true;
}

std::string render_clue(const Clue& clue) {
  if (clue.t_start < 0 || clue.t_end < 0) {
    throw ValidationError("clue times must be non-negative");
  }
  if (clue.t_start > clue.t_end) {
    throw ValidationError("clue t_start " + std::to_string(clue.t_start) +
                          " exceeds t_end " + std::to_string(clue.t_end));
  }
  for (const std::string* f : {&clue.subject, &clue.predicate, &clue.object}) {
    if (!is_valid_clue_token(*f)) {
      throw ValidationError("invalid clue field: '" + *f + "'");
    }
  }
  std::ostringstream out;
  out << '<' << clue.t_start << '-' << clue.t_end << "> " << clue.subject
      << ' ' << clue.predicate << ' ' << clue.object;
  return out.str();
}

Clue parse_clue(const std::string& line) {
  size_t pos = 0;
  Clue clue;
  expect_char(line, pos, '<');
  clue.t_start = parse_time(line, pos, "t_start");
  expect_char(line, pos, '-');
  clue.t_end = parse_time(line, pos, "t_end");
  expect_char(line, pos, '>');
  expect_char(line, pos, ' ');
  clue.subject = parse_field(line, pos, "subject");
  expect_char(line, pos, ' ');
  clue.predicate = parse_field(line, pos, "predicate");
  expect_char(line, pos, ' ');
  clue.object = parse_field(line, pos, "object");
  if (pos != line.size()) {
    throw ParseError("trailing characters at position " + std::to_string(pos));
  }
  if (clue.t_start > clue.t_end) {
    throw ParseError("t_start " + std::to_string(clue.t_start) +
                     " exceeds t_end " + std::to_string(clue.t_end));
  }
  return clue;
}

void ClueCollection::normalize() {
  std::sort(clues.begin(), clues.end(), [](const Clue& a, const Clue& b) {
    return std::tie(a.t_start, a.t_end, a.subject, a.predicate, a.object) <
           std::tie(b.t_start, b.t_end, b.subject, b.predicate, b.object);
  });
}

void ClueCollection::validate() const {
  if (num_frames <= 0) {
    throw ValidationError("collection num_frames must be positive");
  }
  for (size_t i = 0; i < clues.size(); ++i) {
    const Clue& c = clues[i];
    if (c.t_start < 0 || c.t_end >= num_frames || c.t_start > c.t_end) {
      throw ValidationError("clue " + std::to_string(i) + " lifespan [" +
                            std::to_string(c.t_start) + "," +
                            std::to_string(c.t_end) +
                            "] outside video of " +
                            std::to_string(num_frames) + " frames");
    }
    for (const std::string* f : {&c.subject, &c.predicate, &c.object}) {
      if (!is_valid_clue_token(*f)) {
        throw ValidationError("clue " + std::to_string(i) +
                              " has invalid field '" + *f + "'");
      }
    }
  }
}

std::vector<int> covering_clues(const ClueCollection& collection, int t) {
  if (t < 0 || t >= collection.num_frames) {
    throw ValidationError("frame index " + std::to_string(t) +
                          " outside video of " +
                          std::to_string(collection.num_frames) + " frames");
  }
  std::vector<int> out;
  for (size_t i = 0; i < collection.clues.size(); ++i) {
    if (collection.clues[i].t_start <= t && t <= collection.clues[i].t_end) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

std::string render_clue_lines(const std::vector<Clue>& clues) {
  std::string out;
  for (const Clue& c : clues) {
    out += render_clue(c);
    out += '\n';
  }
  return out;
}

std::vector<Clue> parse_clue_lines(const std::string& text) {
  std::vector<Clue> out;
  size_t pos = 0;
  int line_no = 1;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    std::string line = text.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    if (!line.empty()) {
      try {
        out.push_back(parse_clue(line));
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
    ++line_no;
  }
  return out;
}

}  // namespace clueqa
