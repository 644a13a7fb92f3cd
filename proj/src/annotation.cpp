#include "hspp/annotation.hpp"

#include <sstream>

#include "hspp/common.hpp"

namespace hspp {
namespace {

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

int to_int(const std::string& s, int line_no) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Invalid, "line " + std::to_string(line_no) + ": bad integer '" + s + "'");
}

}  // namespace

std::string AnnotatedText::surface() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

AnnotatedText parse_annotation(std::string_view text) {
  AnnotatedText out;
  int line_no = 0;
  int sentence_begin = 0;
  auto close_sentence = [&] {
    const int n = static_cast<int>(out.tokens.size());
    if (n > sentence_begin) out.sentences.push_back({sentence_begin, n});
    sentence_begin = n;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      close_sentence();
    } else if (line.front() != '#') {
      const auto fields = split_tabs(line);
      if (fields.size() != 7) {
        throw Error(ErrorKind::Invalid, "line " + std::to_string(line_no) + ": expected 7 fields, got " +
                                            std::to_string(fields.size()));
      }
      AnnotatedToken tok;
      tok.index = to_int(fields[0], line_no);
      tok.text = fields[1];
      tok.lemma = fields[2];
      tok.pos = fields[3];
      tok.head = to_int(fields[4], line_no);
      tok.dep = fields[5];
      if (fields[6] != "0" && fields[6] != "1") {
        throw Error(ErrorKind::Invalid, "line " + std::to_string(line_no) + ": is_stop must be 0 or 1");
      }
      tok.is_stop = fields[6] == "1";
      out.tokens.push_back(std::move(tok));
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  close_sentence();
  validate(out);
  return out;
}

std::string format_annotation(const AnnotatedText& text) {
  std::ostringstream os;
  for (std::size_t s = 0; s < text.sentences.size(); ++s) {
    if (s) os << '\n';
    for (int i = text.sentences[s].begin; i < text.sentences[s].end; ++i) {
      const auto& t = text.tokens[static_cast<std::size_t>(i)];
      os << t.index << '\t' << t.text << '\t' << t.lemma << '\t' << t.pos << '\t' << t.head
         << '\t' << t.dep << '\t' << (t.is_stop ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

AnnotatedText read_annotation(const std::string& path) {
  try {
    return parse_annotation(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_annotation(const AnnotatedText& text, const std::string& path) {
  validate(text);
  write_file(path, format_annotation(text));
}

void validate(const AnnotatedText& text) {
  const int n = static_cast<int>(text.tokens.size());
  for (int i = 0; i < n; ++i) {
    if (text.tokens[static_cast<std::size_t>(i)].index != i) {
      throw Error(ErrorKind::Invalid, "token indices must be dense and ordered (at " + std::to_string(i) + ")");
    }
  }
  int covered = 0;
  for (const auto& s : text.sentences) {
    if (s.begin != covered || s.end <= s.begin || s.end > n) {
      throw Error(ErrorKind::Invalid, "sentence boundaries do not tile the token sequence");
    }
    covered = s.end;
    int roots = 0;
    for (int i = s.begin; i < s.end; ++i) {
      const auto& t = text.tokens[static_cast<std::size_t>(i)];
      if (t.head == -1) {
        ++roots;
      } else if (t.head < s.begin || t.head >= s.end || t.head == i) {
        throw Error(ErrorKind::Invalid, "token " + std::to_string(i) + " has dangling head " +
                                            std::to_string(t.head));
      }
    }
    if (roots != 1) {
      throw Error(ErrorKind::Invalid, "sentence starting at token " + std::to_string(s.begin) + " has " +
                                          std::to_string(roots) + " roots");
    }
  }
  if (covered != n) throw Error(ErrorKind::Invalid, "tokens outside any sentence");
}

}  // namespace hspp
