#include "orbit/cli/report.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include <openssl/evp.h>

namespace orbit::cli {

void Table::add(std::vector<Json> row) {
  if (row.size() != header.size()) throw std::logic_error("table row width does not match header");
  rows.push_back(std::move(row));
}

Json Table::to_json() const {
  Json out = Json::array();
  for (const auto& row : rows) {
    Json obj = Json::object();
    for (std::size_t c = 0; c < header.size(); ++c) obj[header[c]] = row[c];
    out.push_back(std::move(obj));
  }
  return out;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return {buf, res.ptr};
}

namespace {

std::string cell_text(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number_float()) return format_number(v.get<double>());
  return v.dump();
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  auto line = [&](const auto& cells, auto&& text) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out += ',';
      out += csv_field(text(cells[c]));
    }
    out += "\r\n";
  };
  line(header, [](const std::string& s) { return s; });
  for (const auto& row : rows) line(row, cell_text);
  return out;
}

std::string git_blob_hash(const std::string& content) {
  const std::string prefix = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("OpenSSL context allocation failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, prefix.data(), prefix.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Json make_report(const Json& cfg, const std::string& hash, const CommandOutput& output) {
  Json report;
  report["command"] = cfg.value("command", std::string());
  report["config"] = cfg;
  report["input_hash"] = hash;
  report["exit_code"] = output.exit_code;
  report["results"] = output.results;
  if (!output.table.header.empty()) report["rows"] = output.table.to_json();
  return report;
}

std::string input_hash(const Json& cfg, const std::vector<std::string>& input_files) {
  std::string content = cfg.dump();
  for (const auto& path : input_files) content += read_file(path);
  return git_blob_hash(content);
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  if (!out) throw ConfigError("cannot write '" + path + "'");
}

void write_output(const Json& cfg, const Json& report, const Table& table, std::ostream& stdout_stream) {
  const auto out = get_string(cfg, "out");
  const bool csv = get_string(cfg, "format") == "csv" && !table.header.empty();
  const std::string body = csv ? table.to_csv() : report.dump(2) + "\n";
  if (out.empty()) {
    stdout_stream << body;
    return;
  }
  write_file(out, body);
  if (csv) write_file(out + ".report.json", report.dump(2) + "\n");
}

}  // namespace orbit::cli
