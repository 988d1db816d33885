#pragma once

// Turns a raw citation string into structured fields, either through an
// external GROBID service or through a deterministic regex stub that keeps
// the fallback testable offline.

#include <optional>
#include <regex>
#include <string>

#include "bibmatch/errors.hpp"
#include "bibmatch/http.hpp"
#include "bibmatch/ingest.hpp"
#include "bibmatch/model.hpp"
#include "bibmatch/netguard.hpp"

namespace bibmatch {

struct ParsedCitation {
    enum class Source { ExternalService, Stub };

    std::optional<int> year;
    std::string first_author_surname;
    std::string article_title;
    std::string journal_title;
    std::string volume;
    std::string first_page;
    std::string last_page;
    std::string doi; // normalized
    Source source = Source::Stub;

    bool operator==(const ParsedCitation&) const = default;
};

class CitationParser {
public:
    virtual ~CitationParser() = default;
    virtual ParsedCitation parse(const std::string& raw) = 0;
};

/// Deterministic offline parser with fixed heuristics, documented here in
/// full (it is deliberately lower-fidelity than the external service):
///   - year: first "(NNNN)" group; dropped when implausible
///   - author: leading "Surname," segment when it looks like a name
///   - title: first quoted span, else the text between "(year)." and the
///     source tail
///   - source tail: trailing "Journal, V(I), p-p."
///   - doi: first embedded "10.xxxx/..." pattern
class StubCitationParser : public CitationParser {
public:
    explicit StubCitationParser(int current_year = MatchConfig::current_calendar_year())
        : current_year_(current_year) {}

    ParsedCitation parse(const std::string& raw) override {
        if (is_blank(raw))
            throw std::invalid_argument("parse_citation_string: empty input");
        ParsedCitation out;
        out.source = ParsedCitation::Source::Stub;

        size_t year_end = std::string::npos;
        if (auto year = find_year(raw, year_end)) {
            if (validate_year(*year, current_year_)) out.year = year;
        }
        out.first_author_surname = leading_surname(raw);
        out.doi = embedded_doi(raw);

        size_t tail_start = std::string::npos;
        parse_source_tail(raw, out, tail_start);

        std::string title = quoted_title(raw);
        if (title.empty()) title = post_year_title(raw, year_end, tail_start);
        out.article_title = title;
        return out;
    }

private:
    static std::optional<int> find_year(const std::string& s, size_t& end_pos) {
        static const std::regex re(R"(\((\d{4})[a-z]?\))");
        std::smatch m;
        if (!std::regex_search(s, m, re)) return std::nullopt;
        end_pos = static_cast<size_t>(m.position(0)) + m.length(0);
        return std::stoi(m[1].str());
    }

    static std::string leading_surname(const std::string& s) {
        size_t comma = s.find(',');
        if (comma == std::string::npos || comma == 0 || comma > 60) return {};
        std::string name = trim(s.substr(0, comma));
        if (name.empty()) return {};
        int words = 1;
        for (char c : name) {
            if (c >= '0' && c <= '9') return {};
            if (c == '(' || c == ')' || c == '"' || c == ';' || c == ':') return {};
            if (c == ' ') ++words;
        }
        if (words > 4) return {};
        return name;
    }

    static std::string embedded_doi(const std::string& s) {
        static const std::regex re(R"((10\.\d{4,9}/[^\s"<>]+))");
        std::smatch m;
        if (!std::regex_search(s, m, re)) return {};
        std::string doi = m[1].str();
        while (!doi.empty() && std::string(".,;)]").find(doi.back()) != std::string::npos)
            doi.pop_back();
        return normalize_doi(doi);
    }

    // Matches a trailing "Journal name, V(I), p-p." segment and fills
    // journal/volume/pages. Records where the segment starts so the title
    // can stop there.
    static void parse_source_tail(const std::string& s, ParsedCitation& out,
                                  size_t& tail_start) {
        static const std::regex re(
            R"(([^.]{2,}?),\s*(\d{1,5})\s*\(([^)]{0,12})\)\s*,\s*(\d{1,6})\s*[-\x96\xE2]?[^\d]{0,2}(\d{1,6})\s*\.?\s*$)");
        std::smatch m;
        if (!std::regex_search(s, m, re)) return;
        std::string journal = trim(m[1].str());
        while (!journal.empty() &&
               std::string("\"'").find(journal.front()) != std::string::npos)
            journal.erase(0, 1);
        out.journal_title = trim(journal);
        out.volume = m[2].str();
        out.first_page = m[4].str();
        out.last_page = m[5].str();
        tail_start = static_cast<size_t>(m.position(0));
    }

    static std::string quoted_title(const std::string& s) {
        static const std::regex ascii_quoted(R"re("([^"]{4,})")re");
        std::smatch m;
        if (std::regex_search(s, m, ascii_quoted)) return strip_trailing_dot(trim(m[1].str()));
        size_t open = s.find("“");
        if (open != std::string::npos) {
            size_t close = s.find("”", open + 3);
            if (close != std::string::npos && close - open > 6)
                return strip_trailing_dot(trim(s.substr(open + 3, close - open - 3)));
        }
        return {};
    }

    static std::string post_year_title(const std::string& s, size_t year_end,
                                       size_t tail_start) {
        if (year_end == std::string::npos) return {};
        size_t begin = year_end;
        while (begin < s.size() && (s[begin] == '.' || is_ascii_space(s[begin]))) ++begin;
        size_t end = tail_start == std::string::npos ? s.size() : tail_start;
        if (end <= begin) return {};
        return strip_trailing_dot(trim(s.substr(begin, end - begin)));
    }

    static std::string strip_trailing_dot(std::string s) {
        while (!s.empty() && (s.back() == '.' || is_ascii_space(s.back()))) s.pop_back();
        return s;
    }

    int current_year_;
};

struct GrobidConfig {
    std::string base_url = "http://localhost:8070";
    std::string citation_path = "/api/processCitation";
    bool consolidate = false; // enrichment happens against the store, not here
    int current_year = MatchConfig::current_calendar_year();
};

/// Client for the citation-processing endpoint of GROBID 0.8.x. The response
/// is a TEI biblStruct fragment, mapped with the same rules as TEI ingest.
class GrobidClient : public CitationParser {
public:
    GrobidClient(GrobidConfig cfg, HttpGuard& guard) : cfg_(std::move(cfg)), guard_(guard) {}

    ParsedCitation parse(const std::string& raw) override {
        if (is_blank(raw))
            throw std::invalid_argument("parse_citation_string: empty input");
        UrlParts url = split_url(cfg_.base_url);
        httplib::Params params{{"citations", raw},
                               {"consolidateCitations", cfg_.consolidate ? "1" : "0"}};
        HttpResponse resp;
        try {
            resp = guard_.execute(
                [&] { return http_post_form(url.origin, url.path + cfg_.citation_path, params); });
        } catch (const ServerError& e) {
            throw ServiceUnavailableError(std::string("citation service: ") + e.what());
        } catch (const QueryExecutionError& e) {
            throw ServiceUnavailableError(std::string("citation service: ") + e.what());
        }
        if (resp.status == 204 || is_blank(resp.body)) return empty_result();

        Reference ref;
        try {
            std::unique_ptr<xml::Element> root = xml::parse(resp.body);
            const xml::Element* bibl =
                root->is("biblStruct") ? root.get() : root->find_first("biblStruct");
            if (!bibl) return empty_result();
            ref = reference_from_biblstruct(*bibl, "parsed");
        } catch (const ParseError& e) {
            throw ParseError(std::string("citation service response: ") + e.what());
        }

        ParsedCitation out;
        out.source = ParsedCitation::Source::ExternalService;
        if (ref.year && validate_year(*ref.year, cfg_.current_year)) out.year = ref.year;
        out.first_author_surname = ref.first_author_surname;
        out.article_title = ref.article_title;
        out.journal_title = ref.journal_title;
        out.volume = ref.volume;
        out.first_page = ref.first_page;
        out.last_page = ref.last_page;
        out.doi = ref.doi;
        return out;
    }

private:
    static ParsedCitation empty_result() {
        ParsedCitation out;
        out.source = ParsedCitation::Source::ExternalService;
        return out;
    }

    GrobidConfig cfg_;
    HttpGuard& guard_;
};

} // namespace bibmatch
