#include "dflow/params_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "dflow/errors.hpp"

namespace dflow::nn {

namespace {

constexpr char kMagic[8] = {'D', 'N', 'F', 'P', 'A', 'R', 'M', '1'};

nlohmann::json spec_to_json(const MlpSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden_widths", spec.hidden_widths},
          {"time_embed_dim", spec.time_embed_dim},
          {"activation", "silu"}};
}

MlpSpec spec_from_json(const nlohmann::json& j) {
  MlpSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
  spec.time_embed_dim = j.at("time_embed_dim").get<int>();
  if (j.at("activation").get<std::string>() != "silu") {
    throw IoError("param container: unknown activation " +
                  j.at("activation").get<std::string>());
  }
  return spec;
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32le(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError(std::string("param container: truncated ") + what);
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_params(std::ostream& out, const MlpSpec& spec,
                  const ParamVector& params) {
  nlohmann::json segs = nlohmann::json::array();
  for (const Segment& s : params.layout()) {
    segs.push_back({{"name", s.name}, {"offset", s.offset}, {"shape", s.shape}});
  }
  nlohmann::json header = {{"format_version", 1},
                           {"kind", "mlp_params"},
                           {"spec", spec_to_json(spec)},
                           {"segments", segs},
                           {"value_count", params.size()}};
  std::string header_text = header.dump();
  out.write(kMagic, sizeof(kMagic));
  write_u32le(out, static_cast<std::uint32_t>(header_text.size()));
  out.write(header_text.data(),
            static_cast<std::streamsize>(header_text.size()));
  // Raw IEEE-754 doubles, little-endian hosts assumed.
  out.write(reinterpret_cast<const char*>(params.values().data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw IoError("param container: write failed");
}

LoadedParams read_params(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic))) {
    throw IoError("param container: truncated magic");
  }
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("param container: bad magic (not a DNFPARM1 file)");
  }
  std::uint32_t header_len = read_u32le(in, "header length");
  std::string header_text(header_len, '\0');
  if (!in.read(header_text.data(), header_len)) {
    throw IoError("param container: truncated header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("param container: bad header JSON: ") + e.what());
  }
  LoadedParams result;
  try {
    if (header.at("format_version").get<int>() != 1) {
      throw IoError("param container: unsupported format_version");
    }
    result.spec = spec_from_json(header.at("spec"));
    std::size_t count = header.at("value_count").get<std::size_t>();
    std::vector<Segment> segs;
    for (const auto& js : header.at("segments")) {
      Segment s;
      s.name = js.at("name").get<std::string>();
      s.offset = js.at("offset").get<std::size_t>();
      s.shape = js.at("shape").get<std::vector<int>>();
      segs.push_back(std::move(s));
    }
    std::vector<double> values(count);
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(count * sizeof(double)))) {
      throw IoError("param container: truncated payload");
    }
    result.params = ParamVector(std::move(segs), std::move(values));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("param container: bad header field: ") + e.what());
  } catch (const ContractError& e) {
    throw IoError(std::string("param container: inconsistent header: ") +
                  e.what());
  }
  if (result.params.layout() != layout(result.spec)) {
    throw IoError("param container: segment table does not match spec");
  }
  return result;
}

void save_params(const std::filesystem::path& path, const MlpSpec& spec,
                 const ParamVector& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_params(out, spec, params);
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

LoadedParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return read_params(in);
}

}  // namespace dflow::nn
