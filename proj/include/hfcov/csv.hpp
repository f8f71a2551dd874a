#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hfcov::csv {

// Fields of one comma-separated line, surrounding blanks and a trailing '\r' stripped.
std::vector<std::string_view> split(std::string_view line);

std::string_view trim(std::string_view s);

// Shortest decimal text that reads back to the same double.
std::string format(double x);

// Whole-field parse; false on junk, empty input or trailing characters.
bool parse(std::string_view field, double& out);
bool parse(std::string_view field, long& out);

}  // namespace hfcov::csv
