#pragma once

#include <filesystem>
#include <iosfwd>

#include "dflow/mlp.hpp"

namespace dflow::nn {

// Binary parameter container, format "DNFPARM1" (see README for the layout:
// magic, little-endian u32 header length, JSON header, raw f64 payload).
// Numbers round-trip bit-exactly.

void save_params(const std::filesystem::path& path, const MlpSpec& spec,
                 const ParamVector& params);

struct LoadedParams {
  MlpSpec spec;
  ParamVector params;
};

// Throws IoError on wrong magic, truncated files, or headers inconsistent
// with the payload; the message names the offending part.
LoadedParams load_params(const std::filesystem::path& path);

// Stream variants used to embed containers inside training checkpoints.
void write_params(std::ostream& out, const MlpSpec& spec,
                  const ParamVector& params);
LoadedParams read_params(std::istream& in);

}  // namespace dflow::nn
