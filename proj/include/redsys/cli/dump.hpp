#pragma once

#include <string>
#include <string_view>

#include "redsys/core/document.hpp"

namespace redsys::cli {

// Text with every run of attributed characters wrapped as
// "[key=value,...]text[/]"; unattributed text is left bare.
std::string annotated_text(const Document& doc);

// Joins `doc_id` as an editor and returns its current document. Throws
// Error{UnknownDoc} or Error{ConnectionError}.
Document fetch_document(std::string_view address, const std::string& doc_id,
                        const std::string& client_id = "dump");

}  // namespace redsys::cli
