#include "ehr/descriptor.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ehr/config_text.hpp"
#include "ehr/errors.hpp"
#include "ehr/event_model.hpp"

namespace ehr {

namespace {

const std::set<std::string> kTopKeys = {"version", "dataset_name", "tables"};
const std::set<std::string> kTableKeys = {"file",           "patient_id_column",
                                          "timestamp_column", "timestamp_format",
                                          "attribute_columns", "join"};
const std::set<std::string> kJoinKeys = {"table", "on", "columns"};

void check_keys(const ConfigNode& node, const std::set<std::string>& allowed,
                const std::string& where) {
    std::set<std::string> seen;
    for (const auto& [k, v] : node.as_map()) {
        if (!allowed.contains(k)) {
            throw ValidationError(where + ": unknown key '" + k + "'");
        }
        if (!seen.insert(k).second) {
            throw ValidationError(where + ": duplicate key '" + k + "'");
        }
    }
}

std::string require_scalar(const ConfigNode& parent, const std::string& key,
                           const std::string& where) {
    const ConfigNode* n = parent.get(key);
    if (!n || n->is_null()) {
        throw ValidationError(where + ": missing " + key);
    }
    if (!n->is_scalar() || n->as_scalar().empty()) {
        throw ValidationError(where + ": " + key + " must be a non-empty string");
    }
    return n->as_scalar();
}

std::optional<std::string> optional_scalar(const ConfigNode& parent, const std::string& key,
                                           const std::string& where) {
    const ConfigNode* n = parent.get(key);
    if (!n || n->is_null()) {
        return std::nullopt;
    }
    if (!n->is_scalar() || n->as_scalar().empty()) {
        throw ValidationError(where + ": " + key + " must be a non-empty string");
    }
    return n->as_scalar();
}

std::vector<std::string> string_list(const ConfigNode& parent, const std::string& key,
                                     const std::string& where, bool required) {
    const ConfigNode* n = parent.get(key);
    if (!n || n->is_null()) {
        if (required) {
            throw ValidationError(where + ": missing " + key);
        }
        return {};
    }
    if (!n->is_seq()) {
        throw ValidationError(where + ": " + key + " must be a list");
    }
    std::vector<std::string> out;
    for (const auto& item : n->as_seq()) {
        if (!item.is_scalar() || item.as_scalar().empty()) {
            throw ValidationError(where + ": " + key + " entries must be non-empty strings");
        }
        out.push_back(item.as_scalar());
    }
    return out;
}

void validate(const DatasetDescriptor& d) {
    if (d.version != 1) {
        throw ValidationError("unsupported version " + std::to_string(d.version));
    }
    if (d.dataset_name.empty()) {
        throw ValidationError("missing dataset_name");
    }
    std::set<std::string> names;
    for (const auto& t : d.tables) {
        if (!names.insert(t.name).second) {
            throw ValidationError("table '" + t.name + "': duplicate table name");
        }
    }
    for (const auto& t : d.tables) {
        const std::string where = "table '" + t.name + "'";
        if (t.attribute_columns.empty()) {
            throw ValidationError(where + ": attribute_columns must be non-empty");
        }
        std::set<std::string> cols;
        for (const auto& c : t.attribute_columns) {
            if (c == t.patient_id_column) {
                throw ValidationError(where + ": attribute_columns contains patient_id_column '" +
                                      c + "'");
            }
            if (is_reserved_attribute(c)) {
                throw ValidationError(where + ": attribute column uses reserved name '" + c + "'");
            }
            if (!cols.insert(c).second) {
                throw ValidationError(where + ": duplicate attribute column '" + c + "'");
            }
        }
        if (t.timestamp_format && !t.timestamp_column) {
            throw ValidationError(where + ": timestamp_format requires timestamp_column");
        }
        if (t.join) {
            if (t.join->table == t.name) {
                throw ValidationError(where + ": join.table cannot reference itself");
            }
            if (!names.contains(t.join->table)) {
                throw ValidationError(where + ": unknown join target '" + t.join->table + "'");
            }
            if (t.join->columns.empty()) {
                throw ValidationError(where + ": join.columns must be non-empty");
            }
            for (const auto& c : t.join->columns) {
                if (is_reserved_attribute(c)) {
                    throw ValidationError(where + ": join column uses reserved name '" + c + "'");
                }
                if (c == t.patient_id_column) {
                    throw ValidationError(where + ": join column equals patient_id_column");
                }
            }
        }
    }
}

}  // namespace

const TableSpec* DatasetDescriptor::find_table(const std::string& name) const {
    for (const auto& t : tables) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

DatasetDescriptor parse_descriptor(const std::string& text) {
    const ConfigNode root = parse_config_text(text);
    if (!root.is_map()) {
        throw SyntaxError("descriptor root must be a mapping");
    }
    check_keys(root, kTopKeys, "descriptor");

    DatasetDescriptor d;
    d.source_text = text;
    const std::string version = require_scalar(root, "version", "descriptor");
    if (version.find_first_not_of("0123456789") != std::string::npos || version.size() > 9) {
        throw ValidationError("descriptor: version must be an integer");
    }
    d.version = std::stoi(version);
    if (d.version != 1) {
        throw ValidationError("unsupported version " + version);
    }
    d.dataset_name = require_scalar(root, "dataset_name", "descriptor");

    const ConfigNode* tables = root.get("tables");
    if (!tables || !tables->is_map() || tables->as_map().empty()) {
        throw ValidationError("descriptor: tables must be a non-empty mapping");
    }
    for (const auto& [name, node] : tables->as_map()) {
        const std::string where = "table '" + name + "'";
        if (!node.is_map()) {
            throw ValidationError(where + ": must be a mapping");
        }
        check_keys(node, kTableKeys, where);
        TableSpec t;
        t.name = name;
        t.file = require_scalar(node, "file", where);
        t.patient_id_column = require_scalar(node, "patient_id_column", where);
        t.timestamp_column = optional_scalar(node, "timestamp_column", where);
        t.timestamp_format = optional_scalar(node, "timestamp_format", where);
        t.attribute_columns = string_list(node, "attribute_columns", where, true);
        if (const ConfigNode* j = node.get("join"); j && !j->is_null()) {
            if (!j->is_map()) {
                throw ValidationError(where + ": join must be a mapping");
            }
            check_keys(*j, kJoinKeys, where + " join");
            JoinSpec js;
            js.table = require_scalar(*j, "table", where + " join");
            js.on = require_scalar(*j, "on", where + " join");
            js.columns = string_list(*j, "columns", where + " join", true);
            t.join = std::move(js);
        }
        d.tables.push_back(std::move(t));
    }
    validate(d);
    return d;
}

DatasetDescriptor load_descriptor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read descriptor " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    DatasetDescriptor d = parse_descriptor(ss.str());
    d.base_dir = path.parent_path();
    return d;
}

std::string serialize_descriptor(const DatasetDescriptor& d) {
    auto list = [](const std::vector<std::string>& v) {
        ConfigNode::Seq s;
        for (const auto& x : v) {
            s.push_back(ConfigNode::scalar(x));
        }
        return ConfigNode::seq(std::move(s));
    };
    ConfigNode::Map tables;
    for (const auto& t : d.tables) {
        ConfigNode::Map m;
        m.emplace_back("file", ConfigNode::scalar(t.file));
        m.emplace_back("patient_id_column", ConfigNode::scalar(t.patient_id_column));
        if (t.timestamp_column) {
            m.emplace_back("timestamp_column", ConfigNode::scalar(*t.timestamp_column));
        }
        if (t.timestamp_format) {
            m.emplace_back("timestamp_format", ConfigNode::scalar(*t.timestamp_format));
        }
        m.emplace_back("attribute_columns", list(t.attribute_columns));
        if (t.join) {
            ConfigNode::Map j;
            j.emplace_back("table", ConfigNode::scalar(t.join->table));
            j.emplace_back("on", ConfigNode::scalar(t.join->on));
            j.emplace_back("columns", list(t.join->columns));
            m.emplace_back("join", ConfigNode::map(std::move(j)));
        }
        tables.emplace_back(t.name, ConfigNode::map(std::move(m)));
    }
    ConfigNode::Map root;
    root.emplace_back("version", ConfigNode::scalar(std::to_string(d.version)));
    root.emplace_back("dataset_name", ConfigNode::scalar(d.dataset_name));
    root.emplace_back("tables", ConfigNode::map(std::move(tables)));
    return emit_config_text(ConfigNode::map(std::move(root)));
}

bool same_content(const DatasetDescriptor& a, const DatasetDescriptor& b) {
    return a.version == b.version && a.dataset_name == b.dataset_name && a.tables == b.tables;
}

}  // namespace ehr
