#pragma once

// Parses citing-work records out of Crossref-style JSON and TEI XML files,
// and fetches Crossref records live by DOI.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bibmatch/errors.hpp"
#include "bibmatch/http.hpp"
#include "bibmatch/model.hpp"
#include "bibmatch/netguard.hpp"
#include "bibmatch/xml.hpp"

namespace bibmatch {

/// A citing work and its reference list, in source order.
struct CitingWork {
    std::string source_path;
    std::string citing_doi; // normalized; empty when the source has none
    std::vector<Reference> references;
    std::optional<long> reference_count_declared;
};

namespace detail {

inline std::string json_string(const nlohmann::json& obj, const char* field) {
    auto it = obj.find(field);
    if (it == obj.end()) return {};
    if (it->is_string()) return trim(it->get<std::string>());
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    return {};
}

} // namespace detail

/// Builds a CitingWork from a Crossref works-API JSON document. References
/// come from `message.reference`; a missing or empty array yields an empty
/// list. Keys absent in the source are synthesized positionally ("ref1", ...).
inline CitingWork parse_crossref_work(std::string_view document) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("crossref json: ") + e.what());
    }
    if (!root.is_object() || !root.contains("message") || !root["message"].is_object())
        throw ParseError("crossref json: missing `message` object");

    const auto& message = root["message"];
    CitingWork work;
    if (message.contains("DOI") && message["DOI"].is_string())
        work.citing_doi = normalize_doi(message["DOI"].get<std::string>());
    if (message.contains("reference-count") && message["reference-count"].is_number())
        work.reference_count_declared = message["reference-count"].get<long>();

    auto refs = message.find("reference");
    if (refs == message.end() || !refs->is_array()) return work;

    size_t index = 0;
    for (const auto& item : *refs) {
        ++index;
        if (!item.is_object()) continue;
        Reference ref;
        ref.key = detail::json_string(item, "key");
        if (ref.key.empty()) ref.key = "ref" + std::to_string(index);
        ref.year = parse_year_field(detail::json_string(item, "year"));
        ref.volume = detail::json_string(item, "volume");
        ref.first_page = detail::json_string(item, "first-page");
        ref.first_author_surname = detail::json_string(item, "author");
        ref.article_title = detail::json_string(item, "article-title");
        ref.volume_title = detail::json_string(item, "volume-title");
        ref.journal_title = detail::json_string(item, "journal-title");
        std::string doi = detail::json_string(item, "DOI");
        if (!doi.empty()) ref.doi = normalize_doi(doi);
        ref.unstructured = detail::json_string(item, "unstructured");
        work.references.push_back(std::move(ref));
    }
    return work;
}

/// Maps one TEI `biblStruct` element onto a Reference. Used both for Gold
/// Standard documents and for GROBID citation fragments.
inline Reference reference_from_biblstruct(const xml::Element& bibl,
                                           const std::string& fallback_key) {
    Reference ref;
    ref.key = bibl.attr("xml:id");
    if (ref.key.empty()) ref.key = fallback_key;

    if (const xml::Element* surname = bibl.find_first("surname"))
        ref.first_author_surname = surname->collapsed_text();

    for (const xml::Element* title : bibl.find_all("title")) {
        std::string level = title->attr("level");
        std::string text = title->collapsed_text();
        if (text.empty()) continue;
        if (level == "a" && ref.article_title.empty()) ref.article_title = text;
        else if (level == "m" && ref.volume_title.empty()) ref.volume_title = text;
        else if (level == "j" && ref.journal_title.empty()) ref.journal_title = text;
    }

    if (const xml::Element* date = bibl.find_first("date"))
        ref.year = parse_year_field(date->attr("when"));

    for (const xml::Element* scope : bibl.find_all("biblScope")) {
        std::string unit = scope->attr("unit");
        if (unit == "volume" && ref.volume.empty()) {
            ref.volume = scope->collapsed_text();
        } else if (unit == "page" && ref.first_page.empty()) {
            ref.first_page = trim(scope->attr("from"));
            ref.last_page = trim(scope->attr("to"));
            if (ref.first_page.empty()) ref.first_page = scope->collapsed_text();
        }
    }

    for (const xml::Element* idno : bibl.find_all("idno")) {
        std::string type = to_lower_ascii(idno->attr("type"));
        if (type == "doi") {
            std::string doi = idno->collapsed_text();
            if (!doi.empty()) {
                ref.doi = normalize_doi(doi);
                break;
            }
        }
    }
    return ref;
}

/// Builds a CitingWork from a TEI XML document: one Reference per
/// `biblStruct`, in document order. No `biblStruct` elements yields an
/// empty list.
inline CitingWork parse_tei_document(std::string_view document) {
    std::unique_ptr<xml::Element> root = xml::parse(document);
    CitingWork work;
    std::vector<const xml::Element*> bibls;
    if (root->is("biblStruct")) bibls.push_back(root.get());
    else bibls = root->find_all("biblStruct");
    size_t index = 0;
    for (const xml::Element* bibl : bibls) {
        ++index;
        work.references.push_back(
            reference_from_biblstruct(*bibl, "ref" + std::to_string(index)));
    }
    return work;
}

struct CrossrefConfig {
    std::string base_url = "https://api.crossref.org/works/";
};

/// Fetches one work from the Crossref works endpoint and parses its
/// reference list. 404 means the DOI is not registered with Crossref.
inline CitingWork fetch_crossref_work(const std::string& doi, HttpGuard& guard,
                                      const CrossrefConfig& cfg = {}) {
    if (trim(doi).empty()) throw std::invalid_argument("fetch_crossref_work: empty DOI");
    UrlParts url = split_url(cfg.base_url);
    std::string path = url.path + "/" + escape_path(trim(doi));
    HttpGuard::RequestOptions opts;
    opts.pass_through_statuses = {404};
    HttpResponse resp = guard.execute(
        [&] { return http_get(url.origin, path); }, opts);
    if (resp.status == 404)
        throw NotFoundError("crossref: no work registered for DOI " + doi);
    CitingWork work = parse_crossref_work(resp.body);
    work.source_path = cfg.base_url + doi;
    return work;
}

} // namespace bibmatch
