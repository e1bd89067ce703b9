#ifndef REPURPOSE_TSV_HPP
#define REPURPOSE_TSV_HPP

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "repurpose/error.hpp"

namespace repurpose::tsv {

/// Splits one line on tab characters. An empty line yields one empty field.
inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view text) {
    double value = 0.0;
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

inline std::optional<long long> parse_int(std::string_view text) {
    long long value = 0;
    if (text.empty()) return std::nullopt;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

/// Line-oriented reader. Skips `#` comments and blank lines, strips a
/// trailing CR, and tracks the physical line number for error messages.
class Reader {
  public:
    explicit Reader(std::string path) : path_(std::move(path)), in_(path_) {
        if (!in_) throw NotFoundError("cannot open file: " + path_);
    }

    /// Next data row, or false at end of file.
    bool next(std::vector<std::string_view>& fields) {
        while (std::getline(in_, line_)) {
            ++line_no_;
            if (!line_.empty() && line_.back() == '\r') line_.pop_back();
            if (line_.empty() || line_.front() == '#') continue;
            fields = split(line_);
            return true;
        }
        return false;
    }

    /// Consumes the mandatory header row and checks its width.
    void expect_header(std::size_t min_cols, std::size_t max_cols) {
        std::vector<std::string_view> fields;
        if (!next(fields)) throw ParseError(path_, line_no_, "missing header row");
        if (fields.size() < min_cols || fields.size() > max_cols) fail("header has wrong column count");
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }

    std::size_t line() const noexcept { return line_no_; }
    const std::string& path() const noexcept { return path_; }

  private:
    std::string path_;
    std::ifstream in_;
    std::string line_;
    std::size_t line_no_ = 0;
};

/// Opens `path` for writing or throws.
inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    return out;
}

template <typename... Fields>
void write_row(std::ostream& out, const Fields&... fields) {
    bool first = true;
    ((out << (first ? "" : "\t") << fields, first = false), ...);
    out << '\n';
}

}  // namespace repurpose::tsv

#endif  // REPURPOSE_TSV_HPP
