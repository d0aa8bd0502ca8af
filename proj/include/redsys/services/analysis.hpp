#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "redsys/core/algebra.hpp"
#include "redsys/services/layer.hpp"
#include "redsys/services/lexer.hpp"

namespace redsys::services {

// hl=<token kind> for commands, braces and comments; hl=MathDelim for
// everything inside math; words and whitespace in prose get none.
Layer highlight_layer(std::u32string_view text);

// Attribute-only changeset bringing `doc`'s hl layer up to date.
Changeset highlight(const Document& doc);

struct TermSense {
  std::string cd;
  std::string name;

  bool operator==(const TermSense&) const = default;
};

// Surface forms (lowercase, words separated by single spaces) with their
// senses in file order.
class Dictionary {
 public:
  // Lines are `surface<TAB>cd<TAB>name`; blank lines and lines starting
  // with '#' are skipped. Throws Error{DictLoadError} naming the line.
  static Dictionary parse(std::string_view content);
  static Dictionary load(const std::filesystem::path& path);

  void add(std::string_view surface, TermSense sense);
  const std::vector<TermSense>* senses(const std::u32string& surface) const;
  std::size_t max_words() const noexcept { return max_words_; }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::map<std::u32string, std::vector<TermSense>> entries_;
  std::size_t max_words_ = 0;
};

std::u32string fold_case(std::u32string_view text);

struct TermMatch {
  std::size_t begin;
  std::size_t end;
  std::u32string surface;  // normalized dictionary form

  bool operator==(const TermMatch&) const = default;
};

// Leftmost-longest, non-overlapping, case-insensitive whole-word matches in
// prose (outside math, comments and command arguments).
std::vector<TermMatch> spot(std::u32string_view text, const Dictionary& dict);

std::string spot_uri(std::size_t index);

// spot=1 and ui=contextmenu.spotter_plugin.<index> over each match.
Layer spot_layer(std::size_t len, const std::vector<TermMatch>& matches);

// The edit wrapping a match in \termref{cd=..., name=...}{...}.
Changeset annotate(const Document& doc, const TermMatch& match, const TermSense& sense);

// fold=hidden over "\termref{A}{" and its closing "}".
Layer hider_layer(std::u32string_view text);

struct LabelEntry {
  Range span;           // the whole \STRlabel[id]{body}
  std::u32string body;  // raw text between the braces
};

std::map<std::u32string, LabelEntry> label_table(std::u32string_view text);

// fold=hidden over every \STRlabel[id]{body}; for each \STRcopy{id} with a
// known id, fold=hidden over the reference and display=<body> on its first
// character (without $ delimiters inside math); display-error=unresolved
// over references to unknown ids.
Layer transclusion_layer(std::u32string_view text);

// Presentation of a document: characters with a display value show that
// value, fold=hidden characters are dropped, the rest is shown as is.
std::u32string render(const Document& doc);

// Known sTeX commands extending `prefix` (which starts with a backslash).
std::vector<std::u32string> complete_command(std::u32string_view prefix);

}  // namespace redsys::services
