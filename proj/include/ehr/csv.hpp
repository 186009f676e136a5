#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace ehr {

// Streaming RFC 4180 reader: comma separated, double-quote quoting with ""
// escapes, LF or CRLF records, quoted fields may span lines. The first
// record is the header.
class CsvReader {
   public:
    explicit CsvReader(const std::filesystem::path& path, size_t buffer_bytes = 1 << 16);
    CsvReader(const CsvReader&) = delete;
    CsvReader& operator=(const CsvReader&) = delete;
    ~CsvReader();

    const std::vector<std::string>& header() const { return header_; }
    // Index of `name` in the header, or -1.
    int column(const std::string& name) const;

    // Reads the next data record; false at EOF. Throws IoError when the
    // field count differs from the header.
    bool next(std::vector<std::string>& row);

    // 0-based index of the last record returned by next().
    std::uint64_t row_index() const { return rows_ - 1; }
    // 1-based physical line where that record started.
    std::uint64_t line() const { return record_line_; }
    const std::filesystem::path& path() const { return path_; }

   private:
    bool read_record(std::vector<std::string>& out);
    int get();
    int peek();

    std::filesystem::path path_;
    std::FILE* f_ = nullptr;
    std::vector<char> buf_;
    size_t pos_ = 0;
    size_t len_ = 0;
    std::vector<std::string> header_;
    std::uint64_t rows_ = 0;
    std::uint64_t cur_line_ = 1;
    std::uint64_t record_line_ = 1;
};

// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(const std::string& field);

}  // namespace ehr
