#include "redsys/cli/script.hpp"

#include <charconv>
#include <json.hpp>

#include "redsys/error.hpp"

namespace redsys::cli {
namespace {

class LineParser {
 public:
  explicit LineParser(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_space();
    return pos_ == text_.size();
  }

  std::string word() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ' ' && text_[pos_] != '\t') ++pos_;
    if (start == pos_) throw std::invalid_argument("missing argument");
    return std::string(text_.substr(start, pos_ - start));
  }

  template <typename T>
  T number() {
    const std::string w = word();
    T v{};
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || ptr != w.data() + w.size()) {
      throw std::invalid_argument("expected a number, got '" + w + "'");
    }
    return v;
  }

  std::string quoted() {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != '"') throw std::invalid_argument("expected a quoted string");
    const std::size_t start = pos_++;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      ++pos_;
    }
    if (pos_ >= text_.size()) throw std::invalid_argument("unterminated string");
    ++pos_;
    return decode_literal(text_.substr(start, pos_ - start));
  }

  // key=value, where value is a bare word or a quoted string.
  std::pair<std::string, std::string> param() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '=' && text_[pos_] != ' ' && text_[pos_] != '\t') ++pos_;
    if (pos_ == start || pos_ >= text_.size() || text_[pos_] != '=') {
      throw std::invalid_argument("expected key=value");
    }
    std::string key(text_.substr(start, pos_ - start));
    ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '"') return {std::move(key), quoted()};
    const std::size_t vstart = pos_;
    while (pos_ < text_.size() && text_[pos_] != ' ' && text_[pos_] != '\t') ++pos_;
    return {std::move(key), std::string(text_.substr(vstart, pos_ - vstart))};
  }

  static std::string decode_literal(std::string_view literal) {
    try {
      return nlohmann::json::parse(literal).get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("bad string literal: ") + e.what());
    }
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

Command parse_command(LineParser& p) {
  const std::string name = p.word();
  if (name == "open") return cmd::Open{p.quoted()};
  if (name == "insert") {
    cmd::Insert c;
    c.pos = p.number<std::size_t>();
    c.text = p.quoted();
    return c;
  }
  if (name == "delete") {
    cmd::Delete c;
    c.pos = p.number<std::size_t>();
    c.len = p.number<std::size_t>();
    return c;
  }
  if (name == "attr") {
    cmd::Attr c;
    c.pos = p.number<std::size_t>();
    c.len = p.number<std::size_t>();
    c.key = p.word();
    c.value = p.quoted();
    return c;
  }
  if (name == "wait") return cmd::Wait{p.number<std::uint32_t>()};
  if (name == "expectText") return cmd::ExpectText{p.quoted()};
  if (name == "expectAttr") {
    cmd::ExpectAttr c;
    c.pos = p.number<std::size_t>();
    c.key = p.word();
    c.value = p.quoted();
    return c;
  }
  if (name == "event") {
    cmd::Event c;
    c.uri = p.word();
    const std::string mode = p.word();
    if (mode == "sync") {
      c.mode = wire::EventMode::kSync;
    } else if (mode == "async") {
      c.mode = wire::EventMode::kAsync;
    } else {
      throw std::invalid_argument("event mode must be sync or async");
    }
    while (!p.at_end()) {
      auto [key, value] = p.param();
      c.params[key] = value;
    }
    return c;
  }
  if (name == "expectItem") {
    cmd::ExpectItem c;
    c.index = p.number<std::size_t>();
    c.label = p.quoted();
    return c;
  }
  if (name == "pick") return cmd::Pick{p.number<std::size_t>()};
  throw std::invalid_argument("unknown command '" + name + "'");
}

}  // namespace

Script parse_script(std::string_view source) {
  Script script;
  std::size_t line_no = 0;
  while (!source.empty()) {
    const auto nl = source.find('\n');
    std::string_view line = source.substr(0, nl);
    source = nl == std::string_view::npos ? std::string_view{} : source.substr(nl + 1);
    ++line_no;

    LineParser p(line);
    if (p.at_end()) continue;
    const auto first = line.find_first_not_of(" \t");
    if (line[first] == '#') continue;
    try {
      Command c = parse_command(p);
      if (!p.at_end()) throw std::invalid_argument("trailing arguments");
      script.push_back({line_no, std::move(c)});
    } catch (const std::invalid_argument& e) {
      throw Error(Errc::kValidation, "script line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return script;
}

}  // namespace redsys::cli
