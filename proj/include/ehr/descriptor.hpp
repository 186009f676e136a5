#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ehr {

struct JoinSpec {
    std::string table;
    std::string on;
    std::vector<std::string> columns;

    friend bool operator==(const JoinSpec&, const JoinSpec&) = default;
};

struct TableSpec {
    std::string name;
    std::string file;  // relative to the descriptor's directory
    std::string patient_id_column;
    std::optional<std::string> timestamp_column;
    std::optional<std::string> timestamp_format;
    std::vector<std::string> attribute_columns;
    std::optional<JoinSpec> join;

    friend bool operator==(const TableSpec&, const TableSpec&) = default;
};

struct DatasetDescriptor {
    int version = 1;
    std::string dataset_name;
    std::vector<TableSpec> tables;  // declaration order
    // Raw text the descriptor was parsed from; its digest keys the ingest cache.
    std::string source_text;
    // Directory table files are resolved against.
    std::filesystem::path base_dir;

    const TableSpec* find_table(const std::string& name) const;
};

// Throws SyntaxError for malformed text and ValidationError for contract
// violations; messages name the offending table and key.
DatasetDescriptor parse_descriptor(const std::string& text);

// Reads the file and sets base_dir to its parent directory.
DatasetDescriptor load_descriptor(const std::filesystem::path& path);

std::string serialize_descriptor(const DatasetDescriptor& d);

bool same_content(const DatasetDescriptor& a, const DatasetDescriptor& b);

}  // namespace ehr
