#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dflow {

// Flat key=value experiment configuration.
//
// Grammar: one `key = value` entry per line; `#` starts a comment (whole
// line or trailing); blank lines are ignored; keys match [a-z0-9_.]+ and
// values are arbitrary trimmed text. A repeated key overrides the earlier
// value, and programmatic set() calls (the CLI flag layer) override the
// file, so precedence is file order first, then flags.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig from_file(const std::filesystem::path& path);
  static KeyValueConfig from_string(std::string_view text,
                                    const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value);
  // Copy every entry of `other` into this config, overriding duplicates.
  // Used for layering: checkpoint echo, then file, then flag overrides.
  void merge_from(const KeyValueConfig& other);
  bool has(const std::string& key) const;
  std::size_t size() const { return entries_.size(); }

  // Typed getters. Each records the key as consumed (for unknown-key
  // detection) and throws ConfigError naming the key on a malformed value.
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  // Comma-separated lists; empty value -> empty list.
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  // Sorted `key = value` lines; the canonical form behind hash().
  std::string canonical_text() const;
  // FNV-1a over canonical_text(), so any setting change renames the run.
  std::uint64_t hash() const;
  // Sorted key/value pairs for manifests and checkpoint echoes.
  std::vector<std::pair<std::string, std::string>> echo() const;

  // Keys present but outside `known` (exact names or `prefix.` entries that
  // whitelist a whole group). The CLI treats a non-empty result as a usage
  // error so typos never silently fall back to defaults.
  std::vector<std::string> unknown_keys(
      std::span<const std::string_view> known) const;

 private:
  std::string value_or_throw(const std::string& key) const;
  std::map<std::string, std::string> entries_;
};

// runs/<UTC stamp>-<config hash prefix>, or `explicit_dir` verbatim when
// given. Creates the directory (parents included) and fails with IoError if
// that is impossible.
std::filesystem::path make_run_dir(
    const std::filesystem::path& parent, const KeyValueConfig& config,
    const std::optional<std::filesystem::path>& explicit_dir);

// JSON manifest `{command, created_utc, config_hash, config{...}}` merged
// into `extra` (which may already hold command-specific fields).
void write_manifest(const std::filesystem::path& path,
                    const std::string& command, const KeyValueConfig& config,
                    const std::string& extra_json = "{}");

}  // namespace dflow
