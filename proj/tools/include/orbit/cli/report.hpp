#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "orbit/cli/config.hpp"

namespace orbit::cli {

/// Rows of scalar cells (numbers, strings, booleans, null) under a fixed header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Json>> rows;

  void add(std::vector<Json> row);
  [[nodiscard]] Json to_json() const;  // array of objects keyed by header
  [[nodiscard]] std::string to_csv() const;
};

/// RFC-4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string& text);

/// Shortest round-trip decimal with '.' as separator, independent of locale.
std::string format_number(double value);

/// SHA-1 of "blob <size>\0" + content, as 40 hex digits.
std::string git_blob_hash(const std::string& content);

/// Runs fn(0..count-1) on up to `threads` workers. The exception of the lowest failing
/// index is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

struct CommandOutput {
  Json results = Json::object();
  Table table;
  int exit_code = 0;
};

/// Report envelope: command, resolved config, input hash, results.
Json make_report(const Json& cfg, const std::string& input_hash, const CommandOutput& output);

/// Hash over the canonical config text followed by the bytes of each input file.
std::string input_hash(const Json& cfg, const std::vector<std::string>& input_files);

/// Writes the table (csv) or full report (json) to cfg.out, or to stdout when empty.
/// CSV to a file also writes the report to "<out>.report.json".
void write_output(const Json& cfg, const Json& report, const Table& table, std::ostream& stdout_stream);

void write_file(const std::string& path, const std::string& bytes);

}  // namespace orbit::cli
