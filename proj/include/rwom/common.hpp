#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace rwom {

// Lightweight result carrier for operations whose failures are data, not
// control flow (parsing, validation).
template <typename T, typename E>
class Result {
public:
    Result(T value) : storage_(std::move(value)) {}
    Result(E error) : storage_(std::move(error)) {}

    bool ok() const { return std::holds_alternative<T>(storage_); }
    explicit operator bool() const { return ok(); }

    const T& value() const& { return std::get<T>(storage_); }
    T& value() & { return std::get<T>(storage_); }
    T&& value() && { return std::get<T>(std::move(storage_)); }

    const E& error() const& { return std::get<E>(storage_); }
    E& error() & { return std::get<E>(storage_); }

private:
    std::variant<T, E> storage_;
};

struct RwomError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendUnreachable : RwomError {
    using RwomError::RwomError;
};

struct MissingFixture : BackendUnreachable {
    using BackendUnreachable::BackendUnreachable;
};

struct InvalidSpec : RwomError {
    using RwomError::RwomError;
};

namespace log {

using Sink = std::function<void(std::string_view)>;

namespace detail {
inline std::mutex& mu() {
    static std::mutex m;
    return m;
}
inline Sink& sink() {
    static Sink s;  // empty = stderr
    return s;
}
}  // namespace detail

inline void set_sink(Sink s) {
    std::lock_guard<std::mutex> lock(detail::mu());
    detail::sink() = std::move(s);
}

inline void warn(const std::string& msg) {
    std::lock_guard<std::mutex> lock(detail::mu());
    if (detail::sink()) {
        detail::sink()(msg);
    } else {
        std::fputs(("[rwom] " + msg + "\n").c_str(), stderr);
    }
}

}  // namespace log

// FNV-1a, used for deterministic fixture keys and the test embedder.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 14695981039346656037ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace rwom
