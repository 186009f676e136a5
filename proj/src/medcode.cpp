#include "ehr/medcode.hpp"

#include <algorithm>

#include "ehr/csv.hpp"
#include "ehr/errors.hpp"

namespace ehr::medcode {

OntologyGraph::OntologyGraph(std::string system, std::map<std::string, CodeNode> nodes)
    : system_(std::move(system)), nodes_(std::move(nodes)) {
    for (const auto& [code, node] : nodes_) {
        if (!node.parent) {
            continue;
        }
        if (!nodes_.contains(*node.parent)) {
            throw DanglingParentError(system_ + ": parent '" + *node.parent + "' of '" + code +
                                      "' is not a code");
        }
        children_[*node.parent].push_back(code);
    }
    // three-color walk up the parent chain
    enum class Mark { none, active, done };
    std::map<std::string, Mark> mark;
    for (const auto& [start, n] : nodes_) {
        std::vector<const std::string*> path;
        const std::string* cur = &start;
        while (cur && mark[*cur] == Mark::none) {
            mark[*cur] = Mark::active;
            path.push_back(cur);
            const auto& parent = nodes_.at(*cur).parent;
            cur = parent ? &*parent : nullptr;
        }
        if (cur && mark[*cur] == Mark::active) {
            throw CycleError(system_ + ": parent links form a cycle through '" + *cur + "'");
        }
        for (const auto* p : path) {
            mark[*p] = Mark::done;
        }
    }
}

std::optional<std::string> OntologyGraph::lookup(const std::string& code) const {
    auto it = nodes_.find(code);
    if (it == nodes_.end()) {
        return std::nullopt;
    }
    return it->second.name;
}

std::vector<std::string> OntologyGraph::ancestors(const std::string& code) const {
    auto it = nodes_.find(code);
    if (it == nodes_.end()) {
        throw UnknownCodeError(system_ + ": unknown code '" + code + "'");
    }
    std::vector<std::string> out;
    for (auto p = it->second.parent; p; p = nodes_.at(*p).parent) {
        out.push_back(*p);
    }
    return out;
}

std::vector<std::string> OntologyGraph::descendants(const std::string& code) const {
    if (!nodes_.contains(code)) {
        throw UnknownCodeError(system_ + ": unknown code '" + code + "'");
    }
    std::vector<std::string> out;
    std::vector<std::string> stack{code};
    while (!stack.empty()) {
        const std::string cur = std::move(stack.back());
        stack.pop_back();
        auto it = children_.find(cur);
        if (it == children_.end()) {
            continue;
        }
        for (const auto& c : it->second) {
            out.push_back(c);
            stack.push_back(c);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> OntologyGraph::roots() const {
    std::vector<std::string> out;
    for (const auto& [code, n] : nodes_) {
        if (!n.parent) {
            out.push_back(code);
        }
    }
    return out;
}

namespace {

std::vector<int> require_columns(const CsvReader& csv, const std::vector<std::string>& names) {
    std::vector<int> idx;
    for (const auto& n : names) {
        const int i = csv.column(n);
        if (i < 0) {
            throw IoError(csv.path().string() + ": missing column '" + n + "'");
        }
        idx.push_back(i);
    }
    return idx;
}

}  // namespace

OntologyGraph load_ontology(const std::string& system, const std::filesystem::path& file) {
    CsvReader csv(file);
    const auto idx = require_columns(csv, {"code", "name", "parent"});
    std::map<std::string, CodeNode> nodes;
    std::vector<std::string> row;
    while (csv.next(row)) {
        const std::string& code = row[static_cast<size_t>(idx[0])];
        if (code.empty()) {
            throw IoError(file.string() + " line " + std::to_string(csv.line()) + ": empty code");
        }
        CodeNode node{row[static_cast<size_t>(idx[1])], std::nullopt};
        if (const std::string& parent = row[static_cast<size_t>(idx[2])]; !parent.empty()) {
            node.parent = parent;
        }
        if (!nodes.emplace(code, std::move(node)).second) {
            throw DuplicateCodeError(system + ": duplicate code '" + code + "' at " +
                                     file.string() + " line " + std::to_string(csv.line()));
        }
    }
    return OntologyGraph(system, std::move(nodes));
}

CrossMap::CrossMap(std::string source_system, std::string target_system,
                   std::set<std::pair<std::string, std::string>> pairs)
    : source_(std::move(source_system)), target_(std::move(target_system)), pairs_(std::move(pairs)) {}

std::set<std::string> CrossMap::translate(const std::string& code) const {
    std::set<std::string> out;
    for (auto it = pairs_.lower_bound({code, std::string()}); it != pairs_.end() && it->first == code;
         ++it) {
        out.insert(it->second);
    }
    return out;
}

std::set<std::string> CrossMap::translate(const std::set<std::string>& codes) const {
    std::set<std::string> out;
    for (const auto& c : codes) {
        out.merge(translate(c));
    }
    return out;
}

CrossMap load_crossmap(const std::string& source_system, const std::string& target_system,
                       const std::filesystem::path& file) {
    CsvReader csv(file);
    const auto idx = require_columns(csv, {"source", "target"});
    std::set<std::pair<std::string, std::string>> pairs;
    std::vector<std::string> row;
    while (csv.next(row)) {
        const std::string& s = row[static_cast<size_t>(idx[0])];
        const std::string& t = row[static_cast<size_t>(idx[1])];
        if (s.empty() || t.empty()) {
            throw IoError(file.string() + " line " + std::to_string(csv.line()) +
                          ": empty source or target");
        }
        pairs.emplace(s, t);
    }
    return CrossMap(source_system, target_system, std::move(pairs));
}

}  // namespace ehr::medcode
