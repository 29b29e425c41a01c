#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oxdr::detail {

// RFC 4648 standard alphabet with '=' padding.
std::string base64_encode(std::span<const std::byte> data);
std::optional<std::vector<std::byte>> base64_decode(std::string_view text);

}  // namespace oxdr::detail
