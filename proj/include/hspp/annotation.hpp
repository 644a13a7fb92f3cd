#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hspp {

// One token of a dependency-annotated text. Heads are global token indices
// within the same sample; -1 marks a sentence root.
struct AnnotatedToken {
  int index = 0;
  std::string text;
  std::string lemma;
  std::string pos;  // universal POS tag
  int head = -1;
  std::string dep;
  bool is_stop = false;

  bool operator==(const AnnotatedToken&) const = default;
};

struct Sentence {
  int begin = 0;  // first token index
  int end = 0;    // one past last token index
};

struct AnnotatedText {
  std::vector<AnnotatedToken> tokens;
  std::vector<Sentence> sentences;

  std::string surface() const;
};

// Tab-separated, one token per line:
//   index  text  lemma  pos  head  dep  is_stop(0|1)
// Blank lines separate sentences; lines starting with '#' are comments.
AnnotatedText parse_annotation(std::string_view text);
std::string format_annotation(const AnnotatedText& text);

AnnotatedText read_annotation(const std::string& path);
void write_annotation(const AnnotatedText& text, const std::string& path);

// Dense ordered indices, heads inside their own sentence, exactly one root
// per sentence. Throws Error(Invalid) otherwise.
void validate(const AnnotatedText& text);

}  // namespace hspp
