// Copyright seeds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace seeds
{

enum class ErrorCode
{
    domain = 2,
    range = 3,
    config = 4,
    grid = 5,
};

//! Base class for every error raised by the library.
class Error : public std::runtime_error
{
  public:
    Error(ErrorCode code, std::string const& what)
        : std::runtime_error(what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

//! Argument outside the mathematical domain of a function.
class DomainError : public Error
{
  public:
    explicit DomainError(std::string const& what)
        : Error(ErrorCode::domain, what)
    {
    }
};

//! Result would overflow or argument exceeds the supported range.
class RangeError : public Error
{
  public:
    explicit RangeError(std::string const& what)
        : Error(ErrorCode::range, what)
    {
    }
};

//! Invalid or inconsistent configuration.
class ConfigError : public Error
{
  public:
    explicit ConfigError(std::string const& what)
        : Error(ErrorCode::config, what)
    {
    }
};

//! Time grid that cannot be integrated (non-monotone or degenerate steps).
class GridError : public Error
{
  public:
    explicit GridError(std::string const& what) : Error(ErrorCode::grid, what)
    {
    }
};

}  // namespace seeds
