#include "entk/errors.hpp"

namespace entk {

ParseError::ParseError(const std::string& file, long line, const std::string& what)
    : IoError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace entk
