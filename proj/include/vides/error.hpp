// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vides {

/// Base class for every error raised by the library. `code()` is the stable
/// machine-readable identifier used in REST error bodies and CLI messages.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// A request or argument failed validation. `field()` names the offending
/// input when one can be singled out.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message, std::string field = {})
        : Error("validation_error", message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class CapabilityError : public Error {
public:
    explicit CapabilityError(const std::string& message) : Error("capability_error", message) {}
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& message) : Error("backend_error", message) {}
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& message) : Error("not_found", message) {}
};

class StorageError : public Error {
public:
    explicit StorageError(const std::string& message) : Error("storage_error", message) {}
};

class DecodeError : public Error {
public:
    explicit DecodeError(const std::string& message) : Error("decode_error", message) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& message) : Error("numerical_error", message) {}
};

}  // namespace vides
