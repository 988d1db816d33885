#pragma once

// Minimal XML reader covering what TEI bibliographic files and GROBID
// citation fragments actually use: elements, attributes, character data,
// comments, CDATA, numeric/named entities. No DTD processing.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "bibmatch/errors.hpp"
#include "bibmatch/text.hpp"

namespace bibmatch::xml {

/// Element name without its namespace prefix.
inline std::string_view local_name(std::string_view name) {
    size_t colon = name.find(':');
    return colon == std::string_view::npos ? name : name.substr(colon + 1);
}

struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<std::unique_ptr<Element>> children;
    /// Direct character data, keyed by its position among the element
    /// children so mixed content keeps document order.
    std::vector<std::pair<size_t, std::string>> text_runs;

    /// Concatenated direct character data of this element only.
    std::string direct_text() const {
        std::string out;
        for (const auto& [pos, run] : text_runs) out += run;
        return out;
    }

    /// Attribute value by exact name, falling back to local-name match
    /// ("id" also finds "xml:id"). Empty string when absent.
    std::string attr(std::string_view attr_name) const {
        for (const auto& [k, v] : attributes)
            if (k == attr_name) return v;
        for (const auto& [k, v] : attributes)
            if (local_name(k) == attr_name) return v;
        return {};
    }

    bool has_attr(std::string_view attr_name) const {
        for (const auto& [k, v] : attributes)
            if (k == attr_name || local_name(k) == attr_name) return true;
        return false;
    }

    bool is(std::string_view element_name) const { return local_name(name) == element_name; }

    /// First descendant (depth-first) whose local name matches.
    const Element* find_first(std::string_view element_name) const {
        for (const auto& child : children) {
            if (child->is(element_name)) return child.get();
            if (const Element* hit = child->find_first(element_name)) return hit;
        }
        return nullptr;
    }

    /// All descendants (depth-first) whose local name matches.
    void find_all(std::string_view element_name, std::vector<const Element*>& out) const {
        for (const auto& child : children) {
            if (child->is(element_name)) out.push_back(child.get());
            child->find_all(element_name, out);
        }
    }

    std::vector<const Element*> find_all(std::string_view element_name) const {
        std::vector<const Element*> out;
        find_all(element_name, out);
        return out;
    }

    /// Concatenated character data of the whole subtree, in document order.
    void collect_text(std::string& out) const {
        size_t run = 0;
        for (size_t pos = 0; pos <= children.size(); ++pos) {
            while (run < text_runs.size() && text_runs[run].first == pos)
                out += text_runs[run++].second;
            if (pos < children.size()) children[pos]->collect_text(out);
        }
    }

    /// Subtree text with whitespace runs collapsed to single spaces.
    std::string collapsed_text() const {
        std::string raw;
        collect_text(raw);
        std::string out;
        out.reserve(raw.size());
        bool pending = false;
        for (char c : raw) {
            if (is_ascii_space(c)) {
                pending = true;
                continue;
            }
            if (pending && !out.empty()) out.push_back(' ');
            pending = false;
            out.push_back(c);
        }
        return out;
    }
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view input) : in_(input) {}

    std::unique_ptr<Element> parse_document() {
        skip_bom();
        skip_misc();
        if (eof()) throw ParseError("xml: no root element");
        auto root = parse_element();
        skip_misc();
        return root;
    }

private:
    std::string_view in_;
    size_t pos_ = 0;

    bool eof() const { return pos_ >= in_.size(); }
    char peek() const { return in_[pos_]; }
    bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("xml: " + what + " at offset " + std::to_string(pos_));
    }

    void skip_bom() {
        if (in_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    }

    void skip_ws() {
        while (!eof() && is_ascii_space(peek())) ++pos_;
    }

    void skip_until(std::string_view terminator, const std::string& what) {
        size_t end = in_.find(terminator, pos_);
        if (end == std::string_view::npos) fail("unterminated " + what);
        pos_ = end + terminator.size();
    }

    // Prolog, comments, PIs, DOCTYPE (internal subsets skipped bracket-aware).
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<?")) {
                skip_until("?>", "processing instruction");
            } else if (starts_with("<!--")) {
                skip_until("-->", "comment");
            } else if (starts_with("<!DOCTYPE")) {
                int depth = 0;
                while (!eof()) {
                    char c = in_[pos_++];
                    if (c == '[') ++depth;
                    else if (c == ']') --depth;
                    else if (c == '>' && depth <= 0) break;
                }
            } else {
                return;
            }
        }
    }

    static bool is_name_char(char c) {
        return !is_ascii_space(c) && c != '>' && c != '/' && c != '=' && c != '<' &&
               c != '"' && c != '\'';
    }

    std::string read_name() {
        size_t start = pos_;
        while (!eof() && is_name_char(peek())) ++pos_;
        if (pos_ == start) fail("expected name");
        return std::string(in_.substr(start, pos_ - start));
    }

    void decode_entity(std::string& out) {
        size_t end = in_.find(';', pos_);
        if (end == std::string_view::npos || end - pos_ > 12) {
            out.push_back('&'); // tolerate a bare ampersand
            return;
        }
        std::string_view entity = in_.substr(pos_ + 1, end - pos_ - 1);
        pos_ = end + 1;
        if (entity == "amp") out.push_back('&');
        else if (entity == "lt") out.push_back('<');
        else if (entity == "gt") out.push_back('>');
        else if (entity == "quot") out.push_back('"');
        else if (entity == "apos") out.push_back('\'');
        else if (!entity.empty() && entity[0] == '#') {
            uint32_t cp = 0;
            bool ok = entity.size() > 1;
            if (entity.size() > 2 && (entity[1] == 'x' || entity[1] == 'X')) {
                for (size_t i = 2; i < entity.size() && ok; ++i) {
                    char c = entity[i];
                    cp <<= 4;
                    if (c >= '0' && c <= '9') cp |= static_cast<uint32_t>(c - '0');
                    else if (c >= 'a' && c <= 'f') cp |= static_cast<uint32_t>(c - 'a' + 10);
                    else if (c >= 'A' && c <= 'F') cp |= static_cast<uint32_t>(c - 'A' + 10);
                    else ok = false;
                }
            } else {
                for (size_t i = 1; i < entity.size() && ok; ++i) {
                    char c = entity[i];
                    if (c < '0' || c > '9') { ok = false; break; }
                    cp = cp * 10 + static_cast<uint32_t>(c - '0');
                }
            }
            if (ok && cp > 0 && cp <= 0x10FFFF) utf8_append(out, cp);
            else out += "\xEF\xBF\xBD";
        } else {
            // Unknown named entity; keep it readable rather than failing.
            out.push_back('&');
            out += entity;
            out.push_back(';');
        }
    }

    std::string read_attr_value() {
        char quote = peek();
        if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
        ++pos_;
        std::string value;
        while (!eof() && peek() != quote) {
            if (peek() == '&') decode_entity(value);
            else value.push_back(in_[pos_++]);
        }
        if (eof()) fail("unterminated attribute value");
        ++pos_; // closing quote
        return value;
    }

    std::unique_ptr<Element> parse_element() {
        if (peek() != '<') fail("expected '<'");
        ++pos_;
        auto elem = std::make_unique<Element>();
        elem->name = read_name();
        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated start tag");
            if (peek() == '>') {
                ++pos_;
                break;
            }
            if (starts_with("/>")) {
                pos_ += 2;
                return elem;
            }
            std::string attr_name = read_name();
            skip_ws();
            if (eof() || peek() != '=') fail("expected '=' after attribute name");
            ++pos_;
            skip_ws();
            elem->attributes.emplace_back(std::move(attr_name), read_attr_value());
        }
        parse_content(*elem);
        return elem;
    }

    void parse_content(Element& elem) {
        auto current_run = [&]() -> std::string& {
            if (elem.text_runs.empty() || elem.text_runs.back().first != elem.children.size())
                elem.text_runs.emplace_back(elem.children.size(), std::string());
            return elem.text_runs.back().second;
        };
        for (;;) {
            if (eof()) fail("unterminated element <" + elem.name + ">");
            if (peek() == '<') {
                if (starts_with("</")) {
                    pos_ += 2;
                    std::string closing = read_name();
                    skip_ws();
                    if (eof() || peek() != '>') fail("malformed end tag");
                    ++pos_;
                    if (closing != elem.name)
                        fail("mismatched end tag </" + closing + "> for <" + elem.name + ">");
                    return;
                }
                if (starts_with("<!--")) {
                    skip_until("-->", "comment");
                    continue;
                }
                if (starts_with("<![CDATA[")) {
                    pos_ += 9;
                    size_t end = in_.find("]]>", pos_);
                    if (end == std::string_view::npos) fail("unterminated CDATA");
                    current_run() += in_.substr(pos_, end - pos_);
                    pos_ = end + 3;
                    continue;
                }
                if (starts_with("<?")) {
                    skip_until("?>", "processing instruction");
                    continue;
                }
                elem.children.push_back(parse_element());
            } else if (peek() == '&') {
                decode_entity(current_run());
            } else {
                current_run().push_back(in_[pos_++]);
            }
        }
    }
};

} // namespace detail

/// Parses a whole document and returns its root element.
inline std::unique_ptr<Element> parse(std::string_view input) {
    return detail::Parser(input).parse_document();
}

} // namespace bibmatch::xml
