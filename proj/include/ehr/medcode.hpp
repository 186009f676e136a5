#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ehr::medcode {

struct CodeNode {
    std::string name;
    std::optional<std::string> parent;
};

// Parent/child code graph of one coding system. Immutable after load.
class OntologyGraph {
   public:
    // Validates parents exist and links are acyclic. Throws
    // DanglingParentError or CycleError.
    OntologyGraph(std::string system, std::map<std::string, CodeNode> nodes);

    const std::string& system() const { return system_; }
    size_t size() const { return nodes_.size(); }
    bool contains(const std::string& code) const { return nodes_.contains(code); }
    const std::map<std::string, CodeNode>& nodes() const { return nodes_; }

    std::optional<std::string> lookup(const std::string& code) const;
    // Nearest first, excluding the code. Throws UnknownCodeError.
    std::vector<std::string> ancestors(const std::string& code) const;
    // All transitive children, sorted. Throws UnknownCodeError.
    std::vector<std::string> descendants(const std::string& code) const;
    std::vector<std::string> roots() const;

   private:
    std::string system_;
    std::map<std::string, CodeNode> nodes_;
    std::map<std::string, std::vector<std::string>> children_;
};

// CSV with header "code,name,parent"; empty parent marks a root.
// Throws DuplicateCodeError, DanglingParentError, CycleError or IoError.
OntologyGraph load_ontology(const std::string& system, const std::filesystem::path& file);

// Many-to-many mapping between two coding systems.
class CrossMap {
   public:
    CrossMap(std::string source_system, std::string target_system,
             std::set<std::pair<std::string, std::string>> pairs);

    const std::string& source_system() const { return source_; }
    const std::string& target_system() const { return target_; }
    size_t size() const { return pairs_.size(); }

    // Every target paired with code; empty when unmapped.
    std::set<std::string> translate(const std::string& code) const;
    std::set<std::string> translate(const std::set<std::string>& codes) const;

   private:
    std::string source_;
    std::string target_;
    std::set<std::pair<std::string, std::string>> pairs_;
};

// CSV with header "source,target". Duplicate pairs collapse.
CrossMap load_crossmap(const std::string& source_system, const std::string& target_system,
                       const std::filesystem::path& file);

}  // namespace ehr::medcode
