#include "redsys/cli/dump.hpp"

#include "redsys/core/utf8.hpp"
#include "redsys/error.hpp"
#include "redsys/sdk/link.hpp"
#include "redsys/sdk/sync_state.hpp"

namespace redsys::cli {

std::string annotated_text(const Document& doc) {
  std::string out;
  std::size_t i = 0;
  while (i < doc.size()) {
    std::size_t j = i + 1;
    while (j < doc.size() && doc.attrs[j] == doc.attrs[i]) ++j;
    const std::string text = utf8::encode(std::u32string_view(doc.text).substr(i, j - i));
    const AttributeList attrs = doc.attributes_at(i);
    if (attrs.empty()) {
      out += text;
    } else {
      out += '[';
      for (std::size_t k = 0; k < attrs.size(); ++k) {
        if (k) out += ',';
        out += attrs[k].key + "=" + attrs[k].value;
      }
      out += ']' + text + "[/]";
    }
    i = j;
  }
  return out;
}

Document fetch_document(std::string_view address, const std::string& doc_id, const std::string& client_id) {
  auto link = sdk::MessageLink::connect(address);
  link->send({doc_id, wire::Hello{client_id, wire::Role::kEditor, {}, std::nullopt}});
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (std::chrono::steady_clock::now() < deadline) {
    auto msg = link->receive(std::chrono::milliseconds(100));
    if (!msg) {
      if (link->closed()) break;
      continue;
    }
    if (const auto* init = msg->as<wire::Init>()) {
      sdk::SyncState state;
      state.reset(*init);
      link->close();
      return state.display();
    }
    if (const auto* error = msg->as<wire::ErrorMessage>()) {
      link->close();
      throw Error(errc_from_name(error->code), error->detail);
    }
  }
  link->close();
  throw Error(Errc::kConnectionError, "no Init for document " + doc_id);
}

}  // namespace redsys::cli
