#pragma once

// Every outbound HTTP request passes through HttpGuard: token-bucket rate
// limiting (2.5 req/s, burst 10 by default), a bound on in-flight requests,
// and the three-tier retry/backoff policy for 429 / 5xx / 4xx responses.

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "bibmatch/errors.hpp"
#include "bibmatch/log.hpp"

namespace bibmatch {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Time source; injectable so rate-limit and backoff behaviour is testable
/// without real waits.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() = 0; // seconds, monotonic
    virtual void sleep_for(double seconds) = 0;
};

class RealClock : public Clock {
public:
    double now() override {
        auto t = std::chrono::steady_clock::now().time_since_epoch();
        return std::chrono::duration<double>(t).count();
    }
    void sleep_for(double seconds) override {
        if (seconds > 0)
            std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    }
};

inline Clock& real_clock() {
    static RealClock clock;
    return clock;
}

/// Token bucket with continuous refill. Pure state machine over explicit
/// timestamps; callers sleep for the returned duration themselves.
class TokenBucket {
public:
    TokenBucket(double refill_rate, double capacity)
        : capacity_(capacity), refill_rate_(refill_rate), tokens_(capacity) {}

    /// Consumes one token. Returns 0 when a token is available at `now`,
    /// otherwise the wait until the consumed token accrues.
    double acquire(double now) {
        refill(now);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return 0.0;
        }
        double wait = (1.0 - tokens_) / refill_rate_;
        // The token is consumed at now + wait; account for it here.
        tokens_ = 0.0;
        last_refill_ = now + wait;
        return wait;
    }

    double available(double now) const {
        double t = tokens_ + refill_rate_ * (now - last_refill_);
        return std::min(capacity_, t);
    }

private:
    void refill(double now) {
        if (last_refill_ < 0) {
            last_refill_ = now;
            return;
        }
        if (now > last_refill_) {
            tokens_ = std::min(capacity_, tokens_ + refill_rate_ * (now - last_refill_));
            last_refill_ = now;
        }
    }

    double capacity_;
    double refill_rate_;
    double tokens_;
    double last_refill_ = -1.0; // anchored on first acquire
};

enum class ErrorClass { RateLimited, Server, Client };

/// Backoff schedule per error class; `attempt` starts at 1 for the first retry.
///   rate-limited: min(60, 2^attempt * 5)
///   server:       2^attempt + jitter in [0,1)
///   client:       2^attempt
inline double backoff_delay(ErrorClass cls, int attempt, double rng_unit) {
    double base = std::pow(2.0, attempt);
    switch (cls) {
        case ErrorClass::RateLimited: return std::min(60.0, base * 5.0);
        case ErrorClass::Server: return base + rng_unit;
        case ErrorClass::Client: return base;
    }
    return base;
}

/// Counting semaphore bounding concurrent in-flight requests.
class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mtx_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mtx_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mtx_;
    std::condition_variable cv_;
    int count_;
};

struct HttpGuardConfig {
    double rate = 2.5;     // tokens per second
    double burst = 10.0;   // bucket capacity
    int max_in_flight = 10;
    int max_attempts = 3;  // total tries for server/client error classes
};

class HttpGuard {
public:
    explicit HttpGuard(HttpGuardConfig cfg = {}, Clock* clock = &real_clock(),
                       std::function<double()> jitter = default_jitter())
        : cfg_(cfg), clock_(clock), jitter_(std::move(jitter)),
          bucket_(cfg.rate, cfg.burst), in_flight_(cfg.max_in_flight) {}

    struct RequestOptions {
        /// Statuses returned to the caller as-is instead of entering the
        /// retry policy (e.g. 404 from the Crossref works endpoint).
        std::vector<int> pass_through_statuses;
    };

    /// Runs one logical request through rate limiting and the retry policy.
    /// `send` performs a single HTTP attempt and may throw TransportError.
    HttpResponse execute(const std::function<HttpResponse()>& send,
                         const RequestOptions& opts = {}) {
        int attempts = 0;
        int rate_attempts = 0;
        std::vector<int> history;
        for (;;) {
            wait_for_token();
            HttpResponse resp;
            bool transport_failed = false;
            std::string transport_what;
            {
                InFlight guard(in_flight_);
                try {
                    resp = send();
                } catch (const TransportError& e) {
                    transport_failed = true;
                    transport_what = e.what();
                }
            }
            if (transport_failed) {
                history.push_back(0);
                if (++attempts >= cfg_.max_attempts) {
                    consecutive_server_errors_.fetch_add(1);
                    throw ServerError("transport failure after " +
                                          std::to_string(attempts) +
                                          " attempts: " + transport_what,
                                      history);
                }
                backoff(ErrorClass::Server, attempts);
                continue;
            }
            for (int pass : opts.pass_through_statuses) {
                if (resp.status == pass) {
                    consecutive_server_errors_.store(0);
                    return resp;
                }
            }
            if (resp.status >= 200 && resp.status < 300) {
                consecutive_server_errors_.store(0);
                return resp;
            }
            if (resp.status == 429) {
                // Delay is capped at 60 s; retries are not bounded.
                backoff(ErrorClass::RateLimited, ++rate_attempts);
                continue;
            }
            if (resp.status >= 500) {
                history.push_back(resp.status);
                if (++attempts >= cfg_.max_attempts) {
                    consecutive_server_errors_.fetch_add(1);
                    throw ServerError(
                        "server error (last status " + std::to_string(resp.status) +
                            ") after " + std::to_string(attempts) + " attempts",
                        history);
                }
                backoff(ErrorClass::Server, attempts);
                continue;
            }
            if (resp.status >= 400) {
                history.push_back(resp.status);
                if (++attempts >= cfg_.max_attempts) {
                    throw QueryExecutionError(
                        "client error (last status " + std::to_string(resp.status) +
                            ") after " + std::to_string(attempts) + " attempts",
                        history);
                }
                backoff(ErrorClass::Client, attempts);
                continue;
            }
            return resp; // 1xx/3xx: hand back unchanged
        }
    }

    /// Consecutive requests that ended in ServerError; shared with the batch
    /// runner, which pauses when it crosses the error threshold.
    int consecutive_server_errors() const { return consecutive_server_errors_.load(); }
    void reset_consecutive_server_errors() { consecutive_server_errors_.store(0); }

    const HttpGuardConfig& config() const { return cfg_; }

    static std::function<double()> default_jitter() {
        return [] {
            thread_local std::mt19937 rng{std::random_device{}()};
            return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        };
    }

private:
    struct InFlight {
        explicit InFlight(Semaphore& sem) : sem_(sem) { sem_.acquire(); }
        ~InFlight() { sem_.release(); }
        Semaphore& sem_;
    };

    void wait_for_token() {
        double wait;
        {
            std::lock_guard<std::mutex> lock(bucket_mtx_);
            wait = bucket_.acquire(clock_->now());
        }
        if (wait > 0) clock_->sleep_for(wait);
    }

    void backoff(ErrorClass cls, int attempt) {
        double jitter = cls == ErrorClass::Server ? jitter_() : 0.0;
        double delay = backoff_delay(cls, attempt, jitter);
        logging::warn("http_backoff",
                      {{"class", cls == ErrorClass::RateLimited ? "rate_limited"
                                 : cls == ErrorClass::Server    ? "server"
                                                                : "client"},
                       {"attempt", std::to_string(attempt)},
                       {"delay_s", std::to_string(delay)}});
        clock_->sleep_for(delay);
    }

    HttpGuardConfig cfg_;
    Clock* clock_;
    std::function<double()> jitter_;
    TokenBucket bucket_;
    std::mutex bucket_mtx_;
    Semaphore in_flight_;
    std::atomic<int> consecutive_server_errors_{0};
};

} // namespace bibmatch
