#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bibmatch {

/// Input document (JSON, XML, CSV, checkpoint) could not be parsed.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested resource does not exist (e.g. HTTP 404 from the works API).
class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Connection-level failure before any HTTP status was received.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Endpoint kept answering 5xx (or dropping connections) after all retries.
class ServerError : public std::runtime_error {
public:
    ServerError(const std::string& msg, std::vector<int> attempt_statuses)
        : std::runtime_error(msg), attempt_statuses(std::move(attempt_statuses)) {}

    /// HTTP status per attempt; 0 marks a transport-level failure.
    std::vector<int> attempt_statuses;
};

/// Endpoint rejected the request (4xx) after all retries; usually a malformed
/// query or identifier.
class QueryExecutionError : public std::runtime_error {
public:
    QueryExecutionError(const std::string& msg, std::vector<int> attempt_statuses)
        : std::runtime_error(msg), attempt_statuses(std::move(attempt_statuses)) {}

    std::vector<int> attempt_statuses;
};

/// The citation-parsing service could not be reached or gave no usable answer.
class ServiceUnavailableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace bibmatch
