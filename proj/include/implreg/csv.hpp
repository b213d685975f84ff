#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace implreg::csv {

std::vector<std::string> split_line(const std::string& line, char sep = ',');
std::string trim(const std::string& s);
bool parse_double(const std::string& s, double& out);

/// Opens for writing with full precision; throws std::runtime_error on failure.
std::ofstream open_output(const std::string& path);

/// Shortest representation that round-trips.
std::string format_double(double v);

}  // namespace implreg::csv
