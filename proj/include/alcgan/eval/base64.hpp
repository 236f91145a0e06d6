#pragma once

#include <string>
#include <string_view>

#include "alcgan/data/png_io.hpp"

namespace alcgan::eval {

/// Standard alphabet with padding.
std::string base64_encode(const data::Bytes& bytes);
/// Throws ValidationError(field) on malformed input.
data::Bytes base64_decode(std::string_view text, const std::string& field = "base64");

} // namespace alcgan::eval
