#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace reprbench::csv {

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF.
// Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields);

// Quotes the field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

void write_record(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace reprbench::csv
