#include "reprbench/csv.hpp"

#include <istream>
#include <ostream>

#include "reprbench/errors.hpp"

namespace reprbench::csv {

bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    int ch = in.get();
    if (ch == std::char_traits<char>::eof()) return false;

    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    for (;; ch = in.get()) {
        if (ch == std::char_traits<char>::eof()) {
            if (quoted) throw FormatError("csv: unterminated quoted field");
            fields.push_back(std::move(field));
            return true;
        }
        const char c = static_cast<char>(ch);
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted)
                    throw FormatError("csv: quote inside unquoted field");
                quoted = true;
                field_was_quoted = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                field_was_quoted = false;
                break;
            case '\r':
                if (in.peek() == '\n') in.get();
                [[fallthrough]];
            case '\n':
                fields.push_back(std::move(field));
                return true;
            default:
                field.push_back(c);
        }
    }
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_record(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

}  // namespace reprbench::csv
