// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace raea {

/// Base of every error the toolkit raises. `kind()` is the stable one-line
/// prefix the CLI prints ("dimension", "config", "leakage", ...).
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// Action or proprioception width above the hard cap of nine.
class CapViolation : public Error {
public:
    explicit CapViolation(const std::string& what) : Error("cap", what) {}
};

class DegenerateEmbedding : public Error {
public:
    explicit DegenerateEmbedding(const std::string& what) : Error("degenerate", what) {}
};

class CorruptBank : public Error {
public:
    explicit CorruptBank(const std::string& what) : Error("corrupt", what) {}
};

class CorruptCheckpoint : public Error {
public:
    explicit CorruptCheckpoint(const std::string& what) : Error("corrupt", what) {}
};

class CorruptDemos : public Error {
public:
    explicit CorruptDemos(const std::string& what) : Error("corrupt", what) {}
};

class LeakageError : public Error {
public:
    explicit LeakageError(const std::string& what) : Error("leakage", what) {}
};

class MismatchError : public Error {
public:
    explicit MismatchError(const std::string& what) : Error("mismatch", what) {}
};

/// Carries every schema failure found, each as "<json-pointer>: <message>".
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> failures)
        : Error("validation", join(failures)), failures_(std::move(failures)) {}
    const std::vector<std::string>& failures() const noexcept { return failures_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out;
        for (const auto& s : items) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
    std::vector<std::string> failures_;
};

}  // namespace raea
