#include "ehr/config_text.hpp"

#include <sstream>

#include "ehr/errors.hpp"

namespace ehr {

ConfigNode ConfigNode::scalar(std::string s) {
    ConfigNode n;
    n.value_ = std::move(s);
    return n;
}

ConfigNode ConfigNode::map(Map m) {
    ConfigNode n;
    n.value_ = std::move(m);
    return n;
}

ConfigNode ConfigNode::seq(Seq s) {
    ConfigNode n;
    n.value_ = std::move(s);
    return n;
}

const ConfigNode* ConfigNode::get(const std::string& key) const {
    if (!is_map()) {
        return nullptr;
    }
    for (const auto& [k, v] : as_map()) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

namespace {

struct Line {
    int indent;
    std::string text;
    int number;
};

[[noreturn]] void fail(int line, const std::string& msg) {
    throw SyntaxError("line " + std::to_string(line) + ": " + msg);
}

// Removes a trailing comment outside of quotes, then trailing whitespace.
std::string strip_comment(const std::string& s, int line_no) {
    char quote = 0;
    size_t end = s.size();
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == '\\' && quote == '"') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#' && (i == 0 || s[i - 1] == ' ')) {
            end = i;
            break;
        }
    }
    if (quote) {
        fail(line_no, "unterminated quoted string");
    }
    while (end > 0 && (s[end - 1] == ' ' || s[end - 1] == '\r')) {
        --end;
    }
    return s.substr(0, end);
}

std::string parse_quoted(const std::string& s, int line_no) {
    const char q = s.front();
    std::string out;
    size_t i = 1;
    for (; i < s.size(); ++i) {
        const char c = s[i];
        if (q == '"' && c == '\\') {
            if (++i >= s.size()) {
                fail(line_no, "dangling escape");
            }
            switch (s[i]) {
                case 'n':
                    out += '\n';
                    break;
                case 't':
                    out += '\t';
                    break;
                case '"':
                    out += '"';
                    break;
                case '\\':
                    out += '\\';
                    break;
                default:
                    fail(line_no, std::string("unsupported escape \\") + s[i]);
            }
        } else if (c == q) {
            if (q == '\'' && i + 1 < s.size() && s[i + 1] == '\'') {
                out += '\'';
                ++i;
            } else {
                break;
            }
        } else {
            out += c;
        }
    }
    if (i != s.size() - 1) {
        fail(line_no, "trailing characters after quoted string");
    }
    return out;
}

ConfigNode parse_scalar(const std::string& s, int line_no) {
    if (s.empty()) {
        return ConfigNode{};
    }
    const char c = s.front();
    if (c == '"' || c == '\'') {
        return ConfigNode::scalar(parse_quoted(s, line_no));
    }
    switch (c) {
        case '&':
        case '*':
            fail(line_no, "anchors and aliases are not supported");
        case '!':
            fail(line_no, "tags are not supported");
        case '|':
        case '>':
            fail(line_no, "block scalars are not supported");
        case '{':
            fail(line_no, "flow mappings are not supported");
        case '?':
            fail(line_no, "complex keys are not supported");
        case '@':
        case '`':
            fail(line_no, "reserved indicator");
        default:
            break;
    }
    if (c == '[') {
        if (s.back() != ']') {
            fail(line_no, "unterminated flow sequence");
        }
        ConfigNode::Seq items;
        std::string inner = s.substr(1, s.size() - 2);
        std::string cur;
        char quote = 0;
        auto flush = [&](bool allow_empty) {
            size_t b = cur.find_first_not_of(' ');
            size_t e = cur.find_last_not_of(' ');
            std::string item = b == std::string::npos ? "" : cur.substr(b, e - b + 1);
            if (item.empty()) {
                if (!allow_empty) {
                    fail(line_no, "empty flow sequence item");
                }
            } else {
                if (item.front() == '[') {
                    fail(line_no, "nested flow sequences are not supported");
                }
                items.push_back(parse_scalar(item, line_no));
            }
            cur.clear();
        };
        for (size_t i = 0; i < inner.size(); ++i) {
            const char ch = inner[i];
            if (quote) {
                cur += ch;
                if (ch == '\\' && quote == '"' && i + 1 < inner.size()) {
                    cur += inner[++i];
                } else if (ch == quote) {
                    quote = 0;
                }
            } else if (ch == '"' || ch == '\'') {
                quote = ch;
                cur += ch;
            } else if (ch == ',') {
                flush(false);
            } else {
                cur += ch;
            }
        }
        flush(items.empty());
        return ConfigNode::seq(std::move(items));
    }
    return ConfigNode::scalar(s);
}

// Position of the ':' separating key and value, or npos.
size_t find_key_colon(const std::string& s) {
    if (s.empty() || s.front() == '"' || s.front() == '\'' || s.front() == '[') {
        return std::string::npos;
    }
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ':' && (i + 1 == s.size() || s[i + 1] == ' ')) {
            return i;
        }
    }
    return std::string::npos;
}

bool is_seq_item(const std::string& s) { return s == "-" || s.rfind("- ", 0) == 0; }

class Parser {
   public:
    explicit Parser(std::vector<Line> lines) : lines_(std::move(lines)) {}

    ConfigNode parse_document() {
        if (lines_.empty()) {
            return ConfigNode::map({});
        }
        if (lines_[0].indent != 0) {
            fail(lines_[0].number, "document must start at column 0");
        }
        ConfigNode root = parse_block(0);
        if (pos_ != lines_.size()) {
            fail(lines_[pos_].number, "unexpected indentation");
        }
        return root;
    }

   private:
    ConfigNode parse_block(int indent) {
        if (is_seq_item(lines_[pos_].text)) {
            return parse_seq(indent);
        }
        return parse_map(indent);
    }

    ConfigNode parse_map(int indent) {
        ConfigNode::Map entries;
        while (pos_ < lines_.size() && lines_[pos_].indent == indent &&
               !is_seq_item(lines_[pos_].text)) {
            const Line& line = lines_[pos_];
            const size_t colon = find_key_colon(line.text);
            if (colon == std::string::npos || colon == 0) {
                fail(line.number, "expected 'key: value'");
            }
            std::string key = line.text.substr(0, colon);
            if (key.back() == ' ') {
                fail(line.number, "whitespace before ':'");
            }
            std::string rest = colon + 1 < line.text.size() ? line.text.substr(colon + 2) : "";
            const int number = line.number;
            ++pos_;
            ConfigNode value;
            if (!rest.empty()) {
                value = parse_scalar(rest, number);
            } else if (pos_ < lines_.size() && lines_[pos_].indent > indent) {
                value = parse_block(lines_[pos_].indent);
            } else if (pos_ < lines_.size() && lines_[pos_].indent == indent &&
                       is_seq_item(lines_[pos_].text)) {
                value = parse_seq(indent);
            }
            entries.emplace_back(std::move(key), std::move(value));
        }
        if (pos_ < lines_.size() && lines_[pos_].indent > indent) {
            fail(lines_[pos_].number, "unexpected indentation");
        }
        return ConfigNode::map(std::move(entries));
    }

    ConfigNode parse_seq(int indent) {
        ConfigNode::Seq items;
        while (pos_ < lines_.size() && lines_[pos_].indent == indent &&
               is_seq_item(lines_[pos_].text)) {
            Line& line = lines_[pos_];
            std::string rest = line.text.size() > 2 ? line.text.substr(2) : "";
            size_t lead = rest.find_first_not_of(' ');
            const int item_indent = indent + 2 + static_cast<int>(lead == std::string::npos ? 0 : lead);
            if (lead != std::string::npos) {
                rest = rest.substr(lead);
            } else {
                rest.clear();
            }
            if (rest.empty()) {
                ++pos_;
                if (pos_ < lines_.size() && lines_[pos_].indent > indent) {
                    items.push_back(parse_block(lines_[pos_].indent));
                } else {
                    items.emplace_back();
                }
            } else if (is_seq_item(rest) || find_key_colon(rest) != std::string::npos) {
                // inline first entry of a nested block: re-read the remainder
                // as a line at the item's column
                line.indent = item_indent;
                line.text = rest;
                items.push_back(parse_block(item_indent));
            } else {
                ++pos_;
                items.push_back(parse_scalar(rest, line.number));
            }
        }
        return ConfigNode::seq(std::move(items));
    }

    std::vector<Line> lines_;
    size_t pos_ = 0;
};

bool needs_quotes(const std::string& s) {
    if (s.empty()) {
        return true;
    }
    static const std::string kIndicators = "&*!|>{}[]?@`\"'%#,-";
    if (kIndicators.find(s.front()) != std::string::npos || s.front() == ' ' || s.back() == ' ') {
        return true;
    }
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '\n' || c == '\t' || c == '\r') {
            return true;
        }
        if (c == ':' && (i + 1 == s.size() || s[i + 1] == ' ')) {
            return true;
        }
        if (c == '#' && i > 0 && s[i - 1] == ' ') {
            return true;
        }
    }
    return false;
}

std::string quote(const std::string& s) {
    if (!needs_quotes(s)) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"':
                out += "\\\"";
                break;
            case '\\':
                out += "\\\\";
                break;
            case '\n':
                out += "\\n";
                break;
            case '\t':
                out += "\\t";
                break;
            default:
                out += c;
        }
    }
    return out + "\"";
}

bool all_scalars(const ConfigNode::Seq& seq) {
    for (const auto& n : seq) {
        if (!n.is_scalar()) {
            return false;
        }
    }
    return true;
}

void emit(const ConfigNode& node, int indent, std::ostringstream& out);

void emit_value_after_key(const ConfigNode& v, int indent, std::ostringstream& out) {
    if (v.is_null()) {
        out << "\n";
    } else if (v.is_scalar()) {
        out << " " << quote(v.as_scalar()) << "\n";
    } else if (v.is_seq() && all_scalars(v.as_seq())) {
        out << " [";
        const auto& seq = v.as_seq();
        for (size_t i = 0; i < seq.size(); ++i) {
            out << (i ? ", " : "") << quote(seq[i].as_scalar());
        }
        out << "]\n";
    } else if ((v.is_map() && v.as_map().empty())) {
        // an empty map has no block form; emitted as null and read back as such
        out << "\n";
    } else {
        out << "\n";
        emit(v, indent + 2, out);
    }
}

void emit(const ConfigNode& node, int indent, std::ostringstream& out) {
    const std::string pad(static_cast<size_t>(indent), ' ');
    if (node.is_map()) {
        for (const auto& [k, v] : node.as_map()) {
            out << pad << k << ":";
            emit_value_after_key(v, indent, out);
        }
    } else if (node.is_seq()) {
        for (const auto& item : node.as_seq()) {
            if (item.is_scalar()) {
                out << pad << "- " << quote(item.as_scalar()) << "\n";
            } else if (item.is_null()) {
                out << pad << "-\n";
            } else {
                out << pad << "-\n";
                emit(item, indent + 2, out);
            }
        }
    } else if (node.is_scalar()) {
        out << pad << quote(node.as_scalar()) << "\n";
    }
}

}  // namespace

ConfigNode parse_config_text(const std::string& text) {
    std::vector<Line> lines;
    std::istringstream in(text);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (number == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) {
            raw = raw.substr(3);
        }
        int indent = 0;
        while (indent < static_cast<int>(raw.size()) && raw[static_cast<size_t>(indent)] == ' ') {
            ++indent;
        }
        if (indent < static_cast<int>(raw.size()) && raw[static_cast<size_t>(indent)] == '\t') {
            fail(number, "tabs are not allowed for indentation");
        }
        std::string content = strip_comment(raw.substr(static_cast<size_t>(indent)), number);
        if (content.empty()) {
            continue;
        }
        if (content == "---" || content == "..." || content.rfind("--- ", 0) == 0) {
            fail(number, "document markers are not supported");
        }
        if (content.front() == '%') {
            fail(number, "directives are not supported");
        }
        lines.push_back(Line{indent, std::move(content), number});
    }
    return Parser(std::move(lines)).parse_document();
}

std::string emit_config_text(const ConfigNode& node) {
    std::ostringstream out;
    emit(node, 0, out);
    return out.str();
}

}  // namespace ehr
