#include "redsys/services/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "redsys/core/builder.hpp"
#include "redsys/core/utf8.hpp"
#include "redsys/error.hpp"

namespace redsys::services {
namespace {

bool is_word_char(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9') || c >= 0x80;
}

// Index of the token matching the group opened at token `open`, or npos.
std::size_t matching_group(const std::vector<StexToken>& tokens, std::size_t open) {
  int depth = 0;
  for (std::size_t k = open; k < tokens.size(); ++k) {
    if (tokens[k].kind == TokenKind::kBeginGroup) ++depth;
    if (tokens[k].kind == TokenKind::kEndGroup && --depth == 0) return k;
  }
  return std::string::npos;
}

std::u32string_view token_text(std::u32string_view text, const StexToken& t) {
  return text.substr(t.begin, t.end - t.begin);
}

void paint(std::vector<std::string>& values, std::size_t begin, std::size_t end, const std::string& v) {
  for (std::size_t i = begin; i < end && i < values.size(); ++i) values[i] = v;
}

std::u32string strip_math(std::u32string_view body) {
  std::size_t b = 0;
  std::size_t e = body.size();
  while (b < e && body[b] == U'$') ++b;
  while (e > b && body[e - 1] == U'$') --e;
  return std::u32string(body.substr(b, e - b));
}

}  // namespace

Layer highlight_layer(std::u32string_view text) {
  Layer layer = empty_layer({"hl"}, text.size());
  auto& values = layer["hl"];
  for (const auto& t : lex(text)) {
    std::string v;
    if (t.math) {
      v = "MathDelim";
    } else if (t.kind != TokenKind::kWord && t.kind != TokenKind::kWhitespace) {
      v = std::string(kind_name(t.kind));
    }
    if (!v.empty()) paint(values, t.begin, t.end, v);
  }
  return layer;
}

Changeset highlight(const Document& doc) { return layer_changeset(doc, highlight_layer(doc.text)); }

std::u32string fold_case(std::u32string_view text) {
  std::u32string out(text);
  for (auto& c : out) {
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  }
  return out;
}

namespace {

std::vector<std::u32string> split_words(std::u32string_view text) {
  std::vector<std::u32string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_word_char(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::u32string join(const std::vector<std::u32string>& words) {
  std::u32string out;
  for (const auto& w : words) {
    if (!out.empty()) out += U' ';
    out += w;
  }
  return out;
}

}  // namespace

void Dictionary::add(std::string_view surface, TermSense sense) {
  const auto words = split_words(fold_case(utf8::decode(surface)));
  if (words.empty()) throw Error(Errc::kDictLoadError, "empty surface form");
  auto& senses = entries_[join(words)];
  if (std::find(senses.begin(), senses.end(), sense) == senses.end()) senses.push_back(std::move(sense));
  max_words_ = std::max(max_words_, words.size());
}

const std::vector<TermSense>* Dictionary::senses(const std::u32string& surface) const {
  auto it = entries_.find(surface);
  return it == entries_.end() ? nullptr : &it->second;
}

Dictionary Dictionary::parse(std::string_view content) {
  Dictionary dict;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos) {
      throw Error(Errc::kDictLoadError, "line " + std::to_string(line_no) + ": expected surface<TAB>cd<TAB>name");
    }
    try {
      dict.add(line.substr(0, t1), TermSense{std::string(line.substr(t1 + 1, t2 - t1 - 1)),
                                             std::string(line.substr(t2 + 1))});
    } catch (const Error& e) {
      throw Error(Errc::kDictLoadError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return dict;
}

Dictionary Dictionary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kDictLoadError, "cannot read " + path.string());
  std::ostringstream content;
  content << in.rdbuf();
  return parse(content.str());
}

std::vector<TermMatch> spot(std::u32string_view text, const Dictionary& dict) {
  struct Word {
    std::size_t begin;
    std::size_t end;
    bool joined;  // separated from the previous word by whitespace only
  };
  std::vector<Word> words;
  std::size_t last_end = std::string::npos;
  bool gap_clean = false;
  for (const auto& t : lex(text)) {
    if (t.kind == TokenKind::kWhitespace && !t.math) continue;
    if (t.kind != TokenKind::kWord || t.math || t.arg) {
      last_end = std::string::npos;
      continue;
    }
    std::size_t i = t.begin;
    while (i < t.end) {
      while (i < t.end && !is_word_char(text[i])) ++i;
      std::size_t j = i;
      while (j < t.end && is_word_char(text[j])) ++j;
      if (j > i) {
        gap_clean = last_end != std::string::npos;
        for (std::size_t k = last_end; gap_clean && k < i; ++k) {
          if (!(text[k] == U' ' || text[k] == U'\t' || text[k] == U'\n' || text[k] == U'\r')) gap_clean = false;
        }
        words.push_back({i, j, gap_clean});
        last_end = j;
      }
      i = j;
    }
  }

  std::vector<TermMatch> out;
  std::size_t w = 0;
  while (w < words.size()) {
    std::size_t best = 0;
    std::u32string best_surface;
    std::u32string surface;
    for (std::size_t n = 1; n <= dict.max_words() && w + n <= words.size(); ++n) {
      if (n > 1 && !words[w + n - 1].joined) break;
      if (n > 1) surface += U' ';
      surface += fold_case(text.substr(words[w + n - 1].begin, words[w + n - 1].end - words[w + n - 1].begin));
      if (dict.senses(surface)) {
        best = n;
        best_surface = surface;
      }
    }
    if (best == 0) {
      ++w;
      continue;
    }
    out.push_back({words[w].begin, words[w + best - 1].end, best_surface});
    w += best;
  }
  return out;
}

std::string spot_uri(std::size_t index) { return "contextmenu.spotter_plugin." + std::to_string(index); }

Layer spot_layer(std::size_t len, const std::vector<TermMatch>& matches) {
  Layer layer = empty_layer({"spot", "ui"}, len);
  for (std::size_t k = 0; k < matches.size(); ++k) {
    paint(layer["spot"], matches[k].begin, matches[k].end, "1");
    paint(layer["ui"], matches[k].begin, matches[k].end, spot_uri(k));
  }
  return layer;
}

Changeset annotate(const Document& doc, const TermMatch& match, const TermSense& sense) {
  const std::string open = "\\termref{cd=" + sense.cd + ", name=" + sense.name + "}{";
  return ChangesetBuilder(doc.pool, doc.size())
      .keep_to(match.begin)
      .insert_utf8(open)
      .keep(match.end - match.begin)
      .insert(U"}")
      .finish();
}

Layer hider_layer(std::u32string_view text) {
  Layer layer = empty_layer({"fold"}, text.size());
  auto& fold = layer["fold"];
  const auto tokens = lex(text);
  for (std::size_t k = 0; k + 1 < tokens.size(); ++k) {
    if (tokens[k].kind != TokenKind::kCommand || token_text(text, tokens[k]) != U"\\termref") continue;
    if (tokens[k + 1].kind != TokenKind::kBeginGroup) continue;
    const std::size_t first_close = matching_group(tokens, k + 1);
    if (first_close == std::string::npos || first_close + 1 >= tokens.size()) continue;
    if (tokens[first_close + 1].kind != TokenKind::kBeginGroup) continue;
    const std::size_t second_close = matching_group(tokens, first_close + 1);
    if (second_close == std::string::npos) continue;
    paint(fold, tokens[k].begin, tokens[first_close + 1].end, "hidden");
    paint(fold, tokens[second_close].begin, tokens[second_close].end, "hidden");
  }
  return layer;
}

namespace {

struct Reference {
  std::size_t command;  // token index of the command
  std::size_t close;    // token index of the closing brace
  std::u32string id;
  std::size_t body_begin = 0;
  std::size_t body_end = 0;
};

// \STRlabel[id]{body} or \STRcopy{id} at token `k`.
std::optional<Reference> parse_reference(std::u32string_view text, const std::vector<StexToken>& tokens,
                                         std::size_t k) {
  const auto name = token_text(text, tokens[k]);
  if (name == U"\\STRcopy") {
    if (k + 1 >= tokens.size() || tokens[k + 1].kind != TokenKind::kBeginGroup) return std::nullopt;
    const std::size_t close = matching_group(tokens, k + 1);
    if (close == std::string::npos) return std::nullopt;
    Reference r{k, close, {}};
    r.id = std::u32string(text.substr(tokens[k + 1].end, tokens[close].begin - tokens[k + 1].end));
    return r;
  }
  if (name == U"\\STRlabel") {
    // [ id ] { body }
    std::size_t m = k + 1;
    if (m >= tokens.size() || token_text(text, tokens[m]) != U"[") return std::nullopt;
    std::size_t id_begin = tokens[m].end;
    ++m;
    while (m < tokens.size() && token_text(text, tokens[m]) != U"]") ++m;
    if (m + 1 >= tokens.size() || tokens[m + 1].kind != TokenKind::kBeginGroup) return std::nullopt;
    const std::size_t close = matching_group(tokens, m + 1);
    if (close == std::string::npos) return std::nullopt;
    Reference r{k, close, std::u32string(text.substr(id_begin, tokens[m].begin - id_begin))};
    r.body_begin = tokens[m + 1].end;
    r.body_end = tokens[close].begin;
    return r;
  }
  return std::nullopt;
}

}  // namespace

std::map<std::u32string, LabelEntry> label_table(std::u32string_view text) {
  std::map<std::u32string, LabelEntry> table;
  const auto tokens = lex(text);
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k].kind != TokenKind::kCommand || token_text(text, tokens[k]) != U"\\STRlabel") continue;
    if (auto r = parse_reference(text, tokens, k)) {
      table.emplace(r->id, LabelEntry{{tokens[k].begin, tokens[r->close].end},
                                      std::u32string(text.substr(r->body_begin, r->body_end - r->body_begin))});
    }
  }
  return table;
}

Layer transclusion_layer(std::u32string_view text) {
  Layer layer = empty_layer({"fold", "display", "display-error"}, text.size());
  const auto tokens = lex(text);
  const auto labels = label_table(text);
  for (const auto& [id, entry] : labels) paint(layer["fold"], entry.span.begin, entry.span.end, "hidden");
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k].kind != TokenKind::kCommand || token_text(text, tokens[k]) != U"\\STRcopy") continue;
    auto r = parse_reference(text, tokens, k);
    if (!r) continue;
    const std::size_t begin = tokens[k].begin;
    const std::size_t end = tokens[r->close].end;
    auto it = labels.find(r->id);
    if (it == labels.end()) {
      paint(layer["display-error"], begin, end, "unresolved");
      continue;
    }
    const std::u32string shown = tokens[k].math ? strip_math(it->second.body) : it->second.body;
    paint(layer["fold"], begin, end, "hidden");
    layer["display"][begin] = utf8::encode(shown);
  }
  return layer;
}

std::u32string render(const Document& doc) {
  std::u32string out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string display = doc.value_at(i, "display");
    if (!display.empty()) {
      out += utf8::decode(display);
    } else if (doc.value_at(i, "fold") != "hidden") {
      out += doc.text[i];
    }
  }
  return out;
}

std::vector<std::u32string> complete_command(std::u32string_view prefix) {
  static const std::vector<std::u32string> kCommands = {
      U"\\STRcopy", U"\\STRlabel", U"\\begin",   U"\\cite",    U"\\emph",  U"\\end",
      U"\\frac",    U"\\label",    U"\\ref",     U"\\section", U"\\sqrt",  U"\\termref",
      U"\\textbf",  U"\\textit"};
  std::vector<std::u32string> out;
  if (prefix.empty() || prefix.front() != U'\\') return out;
  for (const auto& c : kCommands) {
    if (c.size() > prefix.size() && c.compare(0, prefix.size(), prefix) == 0) out.push_back(c);
  }
  return out;
}

}  // namespace redsys::services
