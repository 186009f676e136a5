#include "ehr/processors.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdlib>

#include "ehr/errors.hpp"
#include "json.hpp"

namespace ehr {

using ojson = nlohmann::ordered_json;

std::string_view to_string(ProcessorKind k) {
    switch (k) {
        case ProcessorKind::sequence:
            return "sequence";
        case ProcessorKind::nested_sequence:
            return "nested_sequence";
        case ProcessorKind::multi_hot:
            return "multi_hot";
        case ProcessorKind::raw:
            return "raw";
    }
    return "?";
}

std::string_view to_string(LabelKind k) {
    switch (k) {
        case LabelKind::binary:
            return "binary";
        case LabelKind::multiclass:
            return "multiclass";
        case LabelKind::multilabel:
            return "multilabel";
        case LabelKind::regression:
            return "regression";
    }
    return "?";
}

ProcessorKind processor_kind_from_string(std::string_view s) {
    for (auto k : {ProcessorKind::sequence, ProcessorKind::nested_sequence,
                   ProcessorKind::multi_hot, ProcessorKind::raw}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw SchemaError("unknown processor kind '" + std::string(s) + "'");
}

LabelKind label_kind_from_string(std::string_view s) {
    for (auto k : {LabelKind::binary, LabelKind::multiclass, LabelKind::multilabel,
                   LabelKind::regression}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw SchemaError("unknown label kind '" + std::string(s) + "'");
}

void VocabCounts::add(std::string_view token, std::uint64_t n) {
    if (n == 0) {
        return;
    }
    auto it = counts_.find(token);
    if (it == counts_.end()) {
        counts_.emplace(std::string(token), n);
    } else {
        it->second += n;
    }
}

void VocabCounts::add_all(const TokenList& tokens) {
    for (const auto& t : tokens) {
        add(t);
    }
}

void VocabCounts::merge(const VocabCounts& other) {
    for (const auto& [t, n] : other.counts_) {
        add(t, n);
    }
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    lookup_.reserve(tokens_.size());
    for (size_t i = 0; i < tokens_.size(); ++i) {
        if (i > 0 && !(tokens_[i - 1] < tokens_[i])) {
            throw std::invalid_argument("vocabulary tokens must be sorted and unique");
        }
        lookup_.emplace(tokens_[i], static_cast<std::uint32_t>(i + 2));
    }
}

std::uint32_t Vocabulary::index(std::string_view token) const {
    auto it = lookup_.find(std::string(token));
    return it == lookup_.end() ? kUnkIndex : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return lookup_.contains(std::string(token));
}

std::string_view Vocabulary::token(std::uint32_t index) const {
    if (index == kPadIndex) {
        return kPadToken;
    }
    if (index == kUnkIndex || index - 2 >= tokens_.size()) {
        return kUnkToken;
    }
    return tokens_[index - 2];
}

Vocabulary fit_vocab(std::span<const VocabCounts> partials, std::uint64_t min_count) {
    VocabCounts total;
    for (const auto& p : partials) {
        total.merge(p);
    }
    std::vector<std::string> tokens;
    for (const auto& [t, n] : total.counts()) {
        if (n >= min_count) {
            tokens.push_back(t);
        }
    }
    return Vocabulary(std::move(tokens));  // std::map iteration is already byte-sorted
}

std::uint32_t Bitset::popcount() const {
    std::uint32_t n = 0;
    for (auto b : bytes) {
        n += static_cast<std::uint32_t>(std::popcount(b));
    }
    return n;
}

std::vector<std::uint32_t> encode_sequence(const TokenList& tokens, const Vocabulary& v) {
    std::vector<std::uint32_t> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        out.push_back(v.index(t));
    }
    return out;
}

std::vector<std::vector<std::uint32_t>> encode_nested(const NestedTokens& visits,
                                                      const Vocabulary& v) {
    std::vector<std::vector<std::uint32_t>> out;
    out.reserve(visits.size());
    for (const auto& visit : visits) {
        out.push_back(encode_sequence(visit, v));
    }
    return out;
}

Bitset encode_multihot(const TokenList& tokens, const Vocabulary& v) {
    Bitset bits(v.size());
    for (const auto& t : tokens) {
        bits.set(v.index(t));
    }
    return bits;
}

LabelSpace::LabelSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    std::sort(labels_.begin(), labels_.end());
    labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
}

std::optional<std::uint32_t> LabelSpace::index(std::string_view label) const {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), label,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == labels_.end() || *it != label) {
        return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - labels_.begin());
}

LabelSpace fit_label_space(std::span<const VocabCounts> partials) {
    std::vector<std::string> labels;
    for (const auto& p : partials) {
        for (const auto& [t, n] : p.counts()) {
            labels.push_back(t);
        }
    }
    return LabelSpace(std::move(labels));
}

TokenList label_tokens(const RawValue& value) {
    return std::visit(
        [](const auto& v) -> TokenList {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::string>) {
                return {v};
            } else if constexpr (std::is_same_v<V, std::int64_t>) {
                return {std::to_string(v)};
            } else if constexpr (std::is_same_v<V, bool>) {
                return {v ? "1" : "0"};
            } else if constexpr (std::is_same_v<V, TokenList>) {
                return v;
            } else {
                throw LabelError("value cannot be used as a class label");
            }
        },
        value);
}

namespace {

std::uint8_t encode_binary(const RawValue& value) {
    if (auto b = std::get_if<bool>(&value)) {
        return *b ? 1 : 0;
    }
    if (auto i = std::get_if<std::int64_t>(&value); i && (*i == 0 || *i == 1)) {
        return static_cast<std::uint8_t>(*i);
    }
    if (auto s = std::get_if<std::string>(&value); s && (*s == "0" || *s == "1")) {
        return *s == "1" ? 1 : 0;
    }
    throw LabelError("binary label must be 0, 1, true or false");
}

double encode_real(const RawValue& value) {
    double d;
    if (auto p = std::get_if<double>(&value)) {
        d = *p;
    } else if (auto i = std::get_if<std::int64_t>(&value)) {
        d = static_cast<double>(*i);
    } else if (auto s = std::get_if<std::string>(&value)) {
        char* end = nullptr;
        errno = 0;
        d = std::strtod(s->c_str(), &end);
        if (s->empty() || end != s->c_str() + s->size() || errno == ERANGE) {
            throw LabelError("regression label '" + *s + "' is not a real number");
        }
    } else {
        throw LabelError("regression label must be a real number");
    }
    if (!std::isfinite(d)) {
        throw LabelError("regression label is not finite");
    }
    return d;
}

}  // namespace

EncodedLabel encode_label(const RawValue& value, LabelKind kind, const LabelSpace& space,
                          std::uint64_t* dropped) {
    switch (kind) {
        case LabelKind::binary:
            return encode_binary(value);
        case LabelKind::multiclass: {
            const TokenList t = label_tokens(value);
            if (t.size() != 1) {
                throw LabelError("multiclass label must be a single value");
            }
            auto idx = space.index(t[0]);
            if (!idx) {
                throw LabelError("multiclass label '" + t[0] + "' is outside the label space");
            }
            return *idx;
        }
        case LabelKind::multilabel: {
            Bitset bits(space.size());
            for (const auto& t : label_tokens(value)) {
                if (auto idx = space.index(t)) {
                    bits.set(*idx);
                } else if (dropped) {
                    ++*dropped;
                }
            }
            return bits;
        }
        case LabelKind::regression:
            return encode_real(value);
    }
    throw LabelError("unknown label kind");
}

std::string vocab_state_json(const std::string& field, ProcessorKind kind, const Vocabulary& v) {
    ojson j;
    j["field"] = field;
    j["kind"] = to_string(kind);
    j["reserved"] = {{"pad", kPadIndex}, {"unk", kUnkIndex}};
    j["size"] = v.size();
    j["tokens"] = v.tokens();
    return j.dump(2) + "\n";
}

std::string label_state_json(const std::string& field, LabelKind kind, const LabelSpace& s) {
    ojson j;
    j["field"] = field;
    j["kind"] = to_string(kind);
    j["labels"] = s.labels();
    return j.dump(2) + "\n";
}

Vocabulary vocab_from_state_json(const std::string& text) {
    const ojson j = ojson::parse(text);
    return Vocabulary(j.at("tokens").get<std::vector<std::string>>());
}

LabelSpace label_space_from_state_json(const std::string& text) {
    const ojson j = ojson::parse(text);
    return LabelSpace(j.at("labels").get<std::vector<std::string>>());
}

}  // namespace ehr
