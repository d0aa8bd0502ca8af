#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "redsys/wire/message.hpp"

namespace redsys::cli {

// One command per line; `#` starts a comment line. Text arguments are JSON
// string literals:
//
//   open "initial text"
//   insert 0 "ab"
//   delete 3 2
//   attr 0 2 bold "true"
//   wait 250
//   expectText "ab"
//   expectAttr 1 bold "true"
//   event autocomplete.stex sync pos=3
//   expectItem 0 "\\begin"
//   pick 0
namespace cmd {
struct Open {
  std::string text;
};
struct Insert {
  std::size_t pos = 0;
  std::string text;
};
struct Delete {
  std::size_t pos = 0;
  std::size_t len = 0;
};
struct Attr {
  std::size_t pos = 0;
  std::size_t len = 0;
  std::string key;
  std::string value;
};
struct Wait {
  std::uint32_t ms = 0;
};
struct ExpectText {
  std::string text;
};
// An empty value expects the key to be absent.
struct ExpectAttr {
  std::size_t pos = 0;
  std::string key;
  std::string value;
};
struct Event {
  std::string uri;
  wire::EventMode mode = wire::EventMode::kSync;
  std::map<std::string, std::string> params;
};
struct ExpectItem {
  std::size_t index = 0;
  std::string label;
};
// Applies the action of an item from the last sync event response.
struct Pick {
  std::size_t index = 0;
};
}  // namespace cmd

using Command = std::variant<cmd::Open, cmd::Insert, cmd::Delete, cmd::Attr, cmd::Wait, cmd::ExpectText,
                             cmd::ExpectAttr, cmd::Event, cmd::ExpectItem, cmd::Pick>;

struct ScriptLine {
  std::size_t line = 0;  // 1-based
  Command command;
};

using Script = std::vector<ScriptLine>;

// Throws Error{Validation} naming the offending line.
Script parse_script(std::string_view source);

}  // namespace redsys::cli
