#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace promptmotion::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

}  // namespace promptmotion::text
