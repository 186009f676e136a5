#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace ehr {

// Strict block-structured config text: nested maps, sequences and scalar
// strings. Flow sequences of scalars ("[a, b]") are accepted. Anchors,
// aliases, tags, block scalars, flow maps and multi-document streams are
// rejected with SyntaxError. Repeated map keys are kept in order; consumers
// decide whether they are an error.
class ConfigNode {
   public:
    struct Null {
        friend bool operator==(Null, Null) { return true; }
    };
    using Map = std::vector<std::pair<std::string, ConfigNode>>;  // insertion ordered
    using Seq = std::vector<ConfigNode>;

    ConfigNode() : value_(Null{}) {}
    static ConfigNode scalar(std::string s);
    static ConfigNode map(Map m);
    static ConfigNode seq(Seq s);

    bool is_null() const { return std::holds_alternative<Null>(value_); }
    bool is_scalar() const { return std::holds_alternative<std::string>(value_); }
    bool is_map() const { return std::holds_alternative<Map>(value_); }
    bool is_seq() const { return std::holds_alternative<Seq>(value_); }

    const std::string& as_scalar() const { return std::get<std::string>(value_); }
    const Map& as_map() const { return std::get<Map>(value_); }
    const Seq& as_seq() const { return std::get<Seq>(value_); }

    // Map lookup; nullptr when absent or not a map.
    const ConfigNode* get(const std::string& key) const;

    friend bool operator==(const ConfigNode&, const ConfigNode&) = default;

   private:
    std::variant<Null, std::string, Map, Seq> value_;
};

ConfigNode parse_config_text(const std::string& text);

// Canonical text form; parse_config_text(emit_config_text(n)) == n.
std::string emit_config_text(const ConfigNode& node);

}  // namespace ehr
