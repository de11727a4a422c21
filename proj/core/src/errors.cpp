#include "tome/errors.hpp"

#include <utility>

namespace tome {

RatioError::RatioError(const std::string& what, std::size_t requested, std::size_t capacity)
    : Error(what), requested_(requested), capacity_(capacity) {}

ConfigError::ConfigError(std::string field, const std::string& what)
    : Error(field + ": " + what), field_(std::move(field)) {}

}  // namespace tome
