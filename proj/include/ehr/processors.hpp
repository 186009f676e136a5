#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ehr {

using TokenList = std::vector<std::string>;
using NestedTokens = std::vector<TokenList>;

// Raw feature or label value produced by a task.
using RawValue = std::variant<std::string, std::int64_t, double, bool, TokenList, NestedTokens>;

enum class ProcessorKind { sequence, nested_sequence, multi_hot, raw };
enum class LabelKind { binary, multiclass, multilabel, regression };

std::string_view to_string(ProcessorKind k);
std::string_view to_string(LabelKind k);
ProcessorKind processor_kind_from_string(std::string_view s);
LabelKind label_kind_from_string(std::string_view s);

inline constexpr std::uint32_t kPadIndex = 0;
inline constexpr std::uint32_t kUnkIndex = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

// Per-worker token counts; merging is associative and commutative.
class VocabCounts {
   public:
    void add(std::string_view token, std::uint64_t n = 1);
    void add_all(const TokenList& tokens);
    void merge(const VocabCounts& other);
    const std::map<std::string, std::uint64_t, std::less<>>& counts() const { return counts_; }
    bool empty() const { return counts_.empty(); }

    friend bool operator==(const VocabCounts&, const VocabCounts&) = default;

   private:
    std::map<std::string, std::uint64_t, std::less<>> counts_;
};

// pad = 0, unk = 1, observed tokens at 2.. in lexicographic byte order.
class Vocabulary {
   public:
    Vocabulary() = default;
    // `tokens` must be sorted and unique.
    explicit Vocabulary(std::vector<std::string> tokens);

    std::uint32_t index(std::string_view token) const;
    bool contains(std::string_view token) const;
    // Token for an index; pad/unk map to their reserved spellings.
    std::string_view token(std::uint32_t index) const;
    std::uint32_t size() const { return static_cast<std::uint32_t>(tokens_.size() + 2); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

   private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::uint32_t> lookup_;
};

// Union of partial counts; tokens below min_count are left out.
Vocabulary fit_vocab(std::span<const VocabCounts> partials, std::uint64_t min_count = 1);

// Fixed-length bit vector, LSB-first within each byte.
struct Bitset {
    std::uint32_t size = 0;
    std::vector<std::uint8_t> bytes;

    explicit Bitset(std::uint32_t n = 0) : size(n), bytes((n + 7) / 8, 0) {}
    void set(std::uint32_t i) { bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8)); }
    bool test(std::uint32_t i) const { return (bytes[i / 8] >> (i % 8)) & 1u; }
    std::uint32_t popcount() const;

    friend bool operator==(const Bitset&, const Bitset&) = default;
};

std::vector<std::uint32_t> encode_sequence(const TokenList& tokens, const Vocabulary& v);
std::vector<std::vector<std::uint32_t>> encode_nested(const NestedTokens& visits,
                                                      const Vocabulary& v);
Bitset encode_multihot(const TokenList& tokens, const Vocabulary& v);

// Sorted label space for multiclass and multilabel fields.
class LabelSpace {
   public:
    LabelSpace() = default;
    explicit LabelSpace(std::vector<std::string> labels);  // sorted + deduplicated here

    std::optional<std::uint32_t> index(std::string_view label) const;
    const std::vector<std::string>& labels() const { return labels_; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(labels_.size()); }

    friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

   private:
    std::vector<std::string> labels_;
};

LabelSpace fit_label_space(std::span<const VocabCounts> partials);

using EncodedLabel = std::variant<std::uint8_t, std::uint32_t, Bitset, double>;

// Text form of a multiclass/multilabel value as counted for the label space.
TokenList label_tokens(const RawValue& value);

// Unknown multilabel members are dropped and added to *dropped when given.
// Throws LabelError for invalid binary, out-of-space multiclass and
// non-finite regression values.
EncodedLabel encode_label(const RawValue& value, LabelKind kind, const LabelSpace& space,
                          std::uint64_t* dropped = nullptr);

// Fitted-state sidecar ("procstate.<field>.json").
std::string vocab_state_json(const std::string& field, ProcessorKind kind, const Vocabulary& v);
std::string label_state_json(const std::string& field, LabelKind kind, const LabelSpace& s);
Vocabulary vocab_from_state_json(const std::string& text);
LabelSpace label_space_from_state_json(const std::string& text);

}  // namespace ehr
