#include "dflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
              c == '.';
    if (!ok) return false;
  }
  return true;
}

double parse_double(const std::string& key, const std::string& text) {
  const char* begin = text.c_str();
  const char* end = begin + text.size();
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text +
                      "' as a number");
  }
  return out;
}

long long parse_integer(const std::string& key, const std::string& text) {
  const char* begin = text.c_str();
  const char* end = begin + text.size();
  long long out = 0;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text +
                      "' as an integer");
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string piece = trim(std::string_view(text).substr(start, comma - start));
    if (!piece.empty()) parts.push_back(std::move(piece));
    start = comma + 1;
  }
  return parts;
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str(), path.string());
}

KeyValueConfig KeyValueConfig::from_string(std::string_view text,
                                           const std::string& origin) {
  KeyValueConfig config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    std::size_t hash_at = raw.find('#');
    if (hash_at != std::string_view::npos) raw = raw.substr(0, hash_at);
    std::string line = trim(raw);
    if (line.empty()) continue;

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!valid_key(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": invalid key '" + key + "'");
    }
    config.entries_[key] = value;
  }
  return config;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("invalid config key '" + key + "'");
  entries_[key] = trim(value);
}

void KeyValueConfig::merge_from(const KeyValueConfig& other) {
  for (const auto& [key, value] : other.entries_) entries_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const {
  return entries_.count(key) != 0;
}

std::string KeyValueConfig::value_or_throw(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ConfigError("missing required config key '" + key + "'");
  }
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::string KeyValueConfig::require_string(const std::string& key) const {
  return value_or_throw(key);
}

double KeyValueConfig::get_double(const std::string& key,
                                  double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_double(key, it->second);
}

long KeyValueConfig::get_long(const std::string& key, long fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  return static_cast<long>(parse_integer(key, it->second));
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  long long v = parse_integer(key, it->second);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError("config key '" + key + "': value out of int range");
  }
  return static_cast<int>(v);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': cannot parse '" + it->second +
                    "' as a boolean");
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key,
                                      std::uint64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& text = it->second;
  const char* begin = text.c_str();
  const char* end = begin + text.size();
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text +
                      "' as an unsigned integer");
  }
  return out;
}

std::vector<double> KeyValueConfig::get_double_list(
    const std::string& key) const {
  std::vector<double> out;
  auto it = entries_.find(key);
  if (it == entries_.end()) return out;
  for (const std::string& piece : split_commas(it->second)) {
    out.push_back(parse_double(key, piece));
  }
  return out;
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  auto it = entries_.find(key);
  if (it == entries_.end()) return out;
  for (const std::string& piece : split_commas(it->second)) {
    long long v = parse_integer(key, piece);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError("config key '" + key + "': list entry out of range");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::string KeyValueConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
  }
  return out;
}

std::uint64_t KeyValueConfig::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : canonical_text()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::pair<std::string, std::string>> KeyValueConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(entries_.size());
  for (const auto& kv : entries_) out.push_back(kv);
  return out;
}

std::vector<std::string> KeyValueConfig::unknown_keys(
    std::span<const std::string_view> known) const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_) {
    bool matched = false;
    for (std::string_view k : known) {
      if (!k.empty() && k.back() == '.') {
        if (key.size() > k.size() && key.compare(0, k.size(), k) == 0) {
          matched = true;
          break;
        }
      } else if (key == k) {
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(key);
  }
  return out;
}

std::filesystem::path make_run_dir(
    const std::filesystem::path& parent, const KeyValueConfig& config,
    const std::optional<std::filesystem::path>& explicit_dir) {
  std::filesystem::path dir;
  if (explicit_dir) {
    dir = *explicit_dir;
  } else {
    std::time_t now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);
    char tag[48];
    std::snprintf(tag, sizeof(tag), "%s-%08llx", stamp,
                  static_cast<unsigned long long>(config.hash() & 0xffffffffULL));
    dir = parent / tag;
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create run directory " + dir.string() + ": " +
                  ec.message());
  }
  return dir;
}

void write_manifest(const std::filesystem::path& path,
                    const std::string& command, const KeyValueConfig& config,
                    const std::string& extra_json) {
  nlohmann::json doc = nlohmann::json::parse(extra_json);
  doc["command"] = command;
  std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  doc["created_utc"] = stamp;
  char hash_text[24];
  std::snprintf(hash_text, sizeof(hash_text), "%016llx",
                static_cast<unsigned long long>(config.hash()));
  doc["config_hash"] = hash_text;
  nlohmann::json settings = nlohmann::json::object();
  for (const auto& [key, value] : config.echo()) settings[key] = value;
  doc["config"] = settings;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << doc.dump(2) << "\n";
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace dflow
