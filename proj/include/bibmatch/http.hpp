#pragma once

// Thin httplib-backed transport. Callers wrap these in HttpGuard::execute.

#include <string>
#include <string_view>

#include <httplib.h>

#include "bibmatch/errors.hpp"
#include "bibmatch/netguard.hpp"

namespace bibmatch {

struct UrlParts {
    std::string origin; // scheme://host[:port]
    std::string path;   // leading path, possibly empty
};

inline UrlParts split_url(std::string_view url) {
    UrlParts parts;
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos)
        throw std::invalid_argument("url missing scheme: " + std::string(url));
    size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) {
        parts.origin = std::string(url);
    } else {
        parts.origin = std::string(url.substr(0, path_start));
        parts.path = std::string(url.substr(path_start));
    }
    if (!parts.path.empty() && parts.path.back() == '/') parts.path.pop_back();
    return parts;
}

/// Percent-encodes a path segment, keeping unreserved characters and '/'.
inline std::string escape_path(std::string_view raw) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        bool keep = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' ||
                    c == '~' || c == '/';
        if (keep) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

inline HttpResponse to_response(const httplib::Result& res, const std::string& what) {
    if (!res)
        throw TransportError(what + ": " + httplib::to_string(res.error()));
    return HttpResponse{res->status, res->body};
}

/// One GET attempt against origin+path. Throws TransportError on
/// connection-level failure.
inline HttpResponse http_get(const std::string& origin, const std::string& path,
                             const httplib::Headers& headers = {}) {
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(60, 0);
    return to_response(client.Get(path, headers), "GET " + origin + path);
}

/// One form-encoded POST attempt.
inline HttpResponse http_post_form(const std::string& origin, const std::string& path,
                                   const httplib::Params& params,
                                   const httplib::Headers& headers = {}) {
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(60, 0);
    return to_response(client.Post(path, headers, params), "POST " + origin + path);
}

} // namespace bibmatch
