#pragma once

// A local stand-in for the SPARQL endpoint: records rendered as triples and
// queried by a small independent evaluator (triple-pattern joins with
// VALUES, OPTIONAL, ORDER BY and LIMIT). Deliberately shares no retrieval
// code with the stores under test.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "bibmatch/model.hpp"
#include "bibmatch/text.hpp"

namespace test_support::minisparql {

struct Term {
    enum class Kind { Var, Iri, Literal } kind;
    std::string value;
    bool operator==(const Term&) const = default;
};

struct Triple {
    std::string subject; // IRI
    std::string predicate;
    std::string object; // literal value or IRI
    bool object_is_iri = false;
};

struct TriplePattern {
    Term subject, predicate, object;
};

struct ValuesClause {
    std::string var;
    std::vector<std::string> values;
};

struct Query {
    std::vector<std::string> select_vars;
    std::vector<ValuesClause> values;
    std::vector<TriplePattern> required;
    std::vector<std::vector<TriplePattern>> optionals;
    std::optional<std::string> order_by_var;
    std::optional<size_t> limit;
};

// ---------------------------------------------------------------------------
// Tokenizer / parser for the query subset the adapter emits
// ---------------------------------------------------------------------------

inline std::vector<std::string> tokenize(const std::string& query) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < query.size()) {
        char c = query[i];
        if (bibmatch::is_ascii_space(c)) {
            ++i;
            continue;
        }
        if (c == '{' || c == '}' || c == '.') {
            tokens.emplace_back(1, c);
            ++i;
            continue;
        }
        if (c == '"') {
            std::string lit = "\"";
            ++i;
            while (i < query.size() && query[i] != '"') {
                if (query[i] == '\\' && i + 1 < query.size()) {
                    char esc = query[i + 1];
                    if (esc == 'n') lit.push_back('\n');
                    else if (esc == 'r') lit.push_back('\r');
                    else if (esc == 't') lit.push_back('\t');
                    else lit.push_back(esc);
                    i += 2;
                } else {
                    lit.push_back(query[i++]);
                }
            }
            ++i; // closing quote
            tokens.push_back(lit);
            continue;
        }
        if (c == '<') {
            size_t end = query.find('>', i);
            tokens.push_back(query.substr(i, end - i + 1));
            i = end + 1;
            continue;
        }
        size_t start = i;
        while (i < query.size() && !bibmatch::is_ascii_space(query[i]) && query[i] != '{' &&
               query[i] != '}' && query[i] != '"')
            ++i;
        std::string word = query.substr(start, i - start);
        // A trailing '.' ends a triple pattern unless part of a number/IRI.
        if (word.size() > 1 && word.back() == '.' &&
            word.find(':') == std::string::npos) {
            tokens.push_back(word.substr(0, word.size() - 1));
            tokens.emplace_back(".");
        } else {
            tokens.push_back(word);
        }
    }
    return tokens;
}

class QueryParser {
public:
    explicit QueryParser(const std::string& text) : tokens_(tokenize(text)) {}

    Query parse() {
        Query query;
        while (!eof()) {
            const std::string& tok = peek();
            if (tok == "PREFIX") {
                next();
                std::string name = next(); // "bm:"
                std::string iri = next();  // "<urn:bm:>"
                if (!name.empty() && name.back() == ':') name.pop_back();
                prefixes_[name] = iri.substr(1, iri.size() - 2);
            } else if (tok == "SELECT") {
                next();
                while (!eof() && peek()[0] == '?') query.select_vars.push_back(next().substr(1));
            } else if (tok == "WHERE") {
                next();
                expect("{");
                parse_group(query);
            } else if (tok == "ORDER") {
                next();
                next(); // BY
                query.order_by_var = next().substr(1);
            } else if (tok == "LIMIT") {
                next();
                query.limit = static_cast<size_t>(std::stoul(next()));
            } else {
                next();
            }
        }
        return query;
    }

private:
    void parse_group(Query& query) {
        while (!eof() && peek() != "}") {
            if (peek() == "VALUES") {
                next();
                ValuesClause clause;
                clause.var = next().substr(1);
                expect("{");
                while (peek() != "}") clause.values.push_back(term_value(next()));
                expect("}");
                query.values.push_back(std::move(clause));
            } else if (peek() == "OPTIONAL") {
                next();
                expect("{");
                std::vector<TriplePattern> group;
                while (peek() != "}") {
                    group.push_back(parse_pattern());
                    if (peek() == ".") next();
                }
                expect("}");
                query.optionals.push_back(std::move(group));
            } else {
                query.required.push_back(parse_pattern());
                if (peek() == ".") next();
            }
        }
        expect("}");
    }

    TriplePattern parse_pattern() {
        TriplePattern pattern;
        pattern.subject = parse_term(next());
        pattern.predicate = parse_term(next());
        pattern.object = parse_term(next());
        return pattern;
    }

    Term parse_term(const std::string& tok) {
        if (tok[0] == '?') return {Term::Kind::Var, tok.substr(1)};
        if (tok[0] == '"') return {Term::Kind::Literal, tok.substr(1)};
        if (tok[0] == '<') return {Term::Kind::Iri, tok.substr(1, tok.size() - 2)};
        size_t colon = tok.find(':');
        if (colon != std::string::npos) {
            auto it = prefixes_.find(tok.substr(0, colon));
            if (it != prefixes_.end())
                return {Term::Kind::Iri, it->second + tok.substr(colon + 1)};
        }
        return {Term::Kind::Literal, tok}; // bare number
    }

    static std::string term_value(const std::string& tok) {
        if (!tok.empty() && tok[0] == '"') return tok.substr(1);
        return tok;
    }

    bool eof() const { return pos_ >= tokens_.size(); }
    const std::string& peek() const { return tokens_[pos_]; }
    std::string next() { return tokens_[pos_++]; }
    void expect(const std::string& tok) {
        if (next() != tok) throw std::runtime_error("minisparql: expected " + tok);
    }

    std::vector<std::string> tokens_;
    size_t pos_ = 0;
    std::map<std::string, std::string> prefixes_;
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct Binding {
    std::map<std::string, Term> vars;
};

inline bool term_matches(const Term& pattern, const std::string& value, bool value_is_iri,
                         Binding& binding) {
    if (pattern.kind == Term::Kind::Var) {
        auto it = binding.vars.find(pattern.value);
        if (it == binding.vars.end()) {
            binding.vars[pattern.value] = {value_is_iri ? Term::Kind::Iri : Term::Kind::Literal,
                                           value};
            return true;
        }
        return it->second.value == value;
    }
    if (pattern.kind == Term::Kind::Iri) return value_is_iri && pattern.value == value;
    return !value_is_iri && pattern.value == value;
}

inline std::vector<Binding> match_pattern(const std::vector<Triple>& triples,
                                          const TriplePattern& pattern,
                                          const std::vector<Binding>& input) {
    std::vector<Binding> out;
    for (const Binding& binding : input) {
        for (const Triple& triple : triples) {
            Binding candidate = binding;
            if (!term_matches(pattern.subject, triple.subject, true, candidate)) continue;
            if (!term_matches(pattern.predicate, triple.predicate, true, candidate)) continue;
            if (!term_matches(pattern.object, triple.object, triple.object_is_iri, candidate))
                continue;
            out.push_back(std::move(candidate));
        }
    }
    return out;
}

inline std::string evaluate_to_json(const std::vector<Triple>& triples, const Query& query) {
    std::vector<Binding> bindings{Binding{}};

    for (const ValuesClause& values : query.values) {
        std::vector<Binding> expanded;
        for (const Binding& binding : bindings) {
            for (const std::string& value : values.values) {
                Binding candidate = binding;
                if (term_matches({Term::Kind::Var, values.var}, value, false, candidate))
                    expanded.push_back(std::move(candidate));
            }
        }
        bindings = std::move(expanded);
    }
    for (const TriplePattern& pattern : query.required)
        bindings = match_pattern(triples, pattern, bindings);

    for (const auto& group : query.optionals) {
        std::vector<Binding> next;
        for (const Binding& binding : bindings) {
            std::vector<Binding> extended{binding};
            for (const TriplePattern& pattern : group)
                extended = match_pattern(triples, pattern, extended);
            if (extended.empty()) next.push_back(binding); // left join keeps the row
            else next.insert(next.end(), extended.begin(), extended.end());
        }
        bindings = std::move(next);
    }

    if (query.order_by_var) {
        std::stable_sort(bindings.begin(), bindings.end(),
                         [&](const Binding& a, const Binding& b) {
                             auto ia = a.vars.find(*query.order_by_var);
                             auto ib = b.vars.find(*query.order_by_var);
                             std::string va = ia == a.vars.end() ? "" : ia->second.value;
                             std::string vb = ib == b.vars.end() ? "" : ib->second.value;
                             return va < vb;
                         });
    }
    if (query.limit && bindings.size() > *query.limit) bindings.resize(*query.limit);

    nlohmann::json out;
    out["head"]["vars"] = query.select_vars;
    out["results"]["bindings"] = nlohmann::json::array();
    for (const Binding& binding : bindings) {
        nlohmann::json row = nlohmann::json::object();
        for (const std::string& var : query.select_vars) {
            auto it = binding.vars.find(var);
            if (it == binding.vars.end()) continue;
            row[var] = {{"type", it->second.kind == Term::Kind::Iri ? "uri" : "literal"},
                        {"value", it->second.value}};
        }
        out["results"]["bindings"].push_back(std::move(row));
    }
    return out.dump();
}

// ---------------------------------------------------------------------------
// Triple rendering and the HTTP server
// ---------------------------------------------------------------------------

inline constexpr const char* kResourceBase = "urn:bm:res:";

inline std::vector<Triple> render_triples(const std::vector<bibmatch::Candidate>& records) {
    using bibmatch::field_present;
    std::vector<Triple> triples;
    auto lit = [&](const std::string& res, const char* pred, const std::string& value) {
        triples.push_back({res, std::string("urn:bm:") + pred, value, false});
    };
    for (const bibmatch::Candidate& cand : records) {
        std::string res = kResourceBase + cand.meta_id;
        if (field_present(cand.doi)) lit(res, "doi", bibmatch::normalize_doi(cand.doi));
        if (field_present(cand.title)) {
            lit(res, "title", cand.title);
            lit(res, "normTitle", bibmatch::normalize_title(cand.title));
        }
        if (field_present(cand.first_author_surname)) {
            lit(res, "surname", cand.first_author_surname);
            lit(res, "normSurname", bibmatch::normalize_name(cand.first_author_surname));
        }
        if (cand.year) lit(res, "year", std::to_string(*cand.year));
        if (field_present(cand.volume)) lit(res, "volume", bibmatch::trim(cand.volume));
        if (field_present(cand.first_page)) lit(res, "startPage", bibmatch::trim(cand.first_page));
        if (field_present(cand.last_page)) lit(res, "endPage", bibmatch::trim(cand.last_page));
    }
    return triples;
}

/// Serves the rendered triples on 127.0.0.1 at an ephemeral port.
class SparqlTestServer {
public:
    explicit SparqlTestServer(std::vector<bibmatch::Candidate> records)
        : triples_(render_triples(records)) {
        server_.Post("/sparql", [this](const httplib::Request& req, httplib::Response& res) {
            std::string query = req.get_param_value("query");
            ++queries_served_;
            try {
                Query parsed = QueryParser(query).parse();
                res.set_content(evaluate_to_json(triples_, parsed),
                                "application/sparql-results+json");
            } catch (const std::exception& e) {
                res.status = 400;
                res.set_content(e.what(), "text/plain");
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~SparqlTestServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/sparql"; }
    int queries_served() const { return queries_served_.load(); }

private:
    std::vector<Triple> triples_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> queries_served_{0};
};

} // namespace test_support::minisparql
