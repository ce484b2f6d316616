#include "mplasso/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mplasso {

namespace {

struct Record {
    std::vector<std::string> fields;
    long line = 0;
};

std::vector<Record> split_records(std::string_view text, const std::string& source) {
    std::vector<Record> records;
    Record current;
    std::string field;
    long line = 1;
    current.line = line;
    bool quoted = false;
    bool field_started = false;
    bool after_quote = false;
    std::size_t i = 0;
    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
        after_quote = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(current));
        current = Record{};
        current.line = line;
    };
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                    after_quote = true;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            if (field_started || after_quote) {
                throw ParseError(source, line, static_cast<long>(current.fields.size()) + 1,
                                 "quote inside an unquoted field");
            }
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            continue;
        } else if (c == '\n') {
            end_record();
            ++line;
            current.line = line;
        } else {
            if (after_quote) {
                throw ParseError(source, line, static_cast<long>(current.fields.size()) + 1,
                                 "text after a closing quote");
            }
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted) throw ParseError(source, line, static_cast<long>(current.fields.size()) + 1, "unterminated quote");
    if (field_started || after_quote || !current.fields.empty()) end_record();
    // Blank trailing lines.
    while (!records.empty() && records.back().fields.size() == 1 && records.back().fields[0].empty()) {
        records.pop_back();
    }
    return records;
}

double parse_number(const std::string& raw, const std::string& source, long line, long column) {
    std::size_t b = 0, e = raw.size();
    while (b < e && (raw[b] == ' ' || raw[b] == '\t')) ++b;
    while (e > b && (raw[e - 1] == ' ' || raw[e - 1] == '\t')) --e;
    if (b == e) throw ParseError(source, line, column, "empty cell");
    const char* first = raw.data() + b;
    if (*first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, raw.data() + e, v);
    if (ec != std::errc() || ptr != raw.data() + e) {
        throw ParseError(source, line, column, "not a number: '" + raw + "'");
    }
    if (!std::isfinite(v)) throw ParseError(source, line, column, "non-finite value: '" + raw + "'");
    return v;
}

} // namespace

CsvTable parse_csv(std::string_view text, const std::string& source) {
    const std::vector<Record> records = split_records(text, source);
    if (records.empty()) throw ParseError(source, 1, 1, "file is empty; a header row is required");
    CsvTable table;
    table.header = records.front().fields;
    const std::size_t width = table.header.size();
    for (std::size_t c = 0; c < width; ++c) {
        if (table.header[c].empty()) throw ParseError(source, records.front().line, static_cast<long>(c) + 1, "empty header name");
    }
    table.values.resize(static_cast<Index>(records.size() - 1), static_cast<Index>(width));
    for (std::size_t r = 1; r < records.size(); ++r) {
        const Record& rec = records[r];
        if (rec.fields.size() != width) {
            throw ParseError(source, rec.line, static_cast<long>(std::min(rec.fields.size(), width)) + 1,
                             "expected " + std::to_string(width) + " fields, found " + std::to_string(rec.fields.size()));
        }
        for (std::size_t c = 0; c < width; ++c) {
            table.values(static_cast<Index>(r - 1), static_cast<Index>(c)) =
                parse_number(rec.fields[c], source, rec.line, static_cast<long>(c) + 1);
        }
    }
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path);
}

std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("number formatting failed");
    return {buf, ptr};
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_csv(const std::vector<std::string>& header, const Matrix& values) {
    if (static_cast<Index>(header.size()) != values.cols()) throw DimensionError("header and matrix widths differ");
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out.push_back(',');
        out += csv_escape(header[c]);
    }
    out.push_back('\n');
    for (Index r = 0; r < values.rows(); ++r) {
        for (Index c = 0; c < values.cols(); ++c) {
            if (c) out.push_back(',');
            out += format_double(values(r, c));
        }
        out.push_back('\n');
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values) {
    write_text(path, format_csv(header, values));
}

void write_rows(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out.push_back(',');
        out += csv_escape(header[c]);
    }
    out.push_back('\n');
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw DimensionError("row width differs from the header");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out.push_back(',');
            out += csv_escape(row[c]);
        }
        out.push_back('\n');
    }
    write_text(path, out);
}

} // namespace mplasso
