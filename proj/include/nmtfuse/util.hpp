#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nmtfuse {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::vector<std::string> split_ws(const std::string& line);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string strip(const std::string& s);
bool starts_with(const std::string& s, const std::string& prefix);
bool ends_with(const std::string& s, const std::string& suffix);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::string read_file(const std::string& path);
// Writes to path + ".tmp" then renames, so readers never see partial files.
void write_file_atomic(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);
void make_dirs(const std::string& path);

std::string format_double(double v, int precision);

}  // namespace nmtfuse
