#pragma once

#include <map>
#include <string>
#include <vector>

#include "nmtfuse/nn.hpp"

namespace nmtfuse {

// Persisted model: named parameter tensors plus a UTF-8 metadata block.
//
// File layout (little endian):
//   "NMTCKPT1"
//   u64  entry count
//   per entry: u32 name length, name bytes, u8 dtype (0 = float64),
//              u32 ndim, u64 dims..., row-major float64 payload
//   u64  metadata length, metadata bytes
//
// Metadata is config-style text ("[section]" + "key = value"); raw sections
// (vocabularies, BPE codes) hold one payload line each.
struct Checkpoint {
  struct Entry {
    std::string name;
    ag::Shape shape;
    std::vector<double> data;
  };
  std::vector<Entry> entries;
  std::string metadata;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  static Checkpoint from_params(const nn::ParamStore& params, std::string metadata);
  // Copies values into an existing store; names and shapes must match 1:1.
  void restore_into(nn::ParamStore& params) const;

  std::string meta_value(const std::string& section, const std::string& key) const;
  // Lines of a raw section (order preserved).
  std::vector<std::string> meta_section_lines(const std::string& section) const;
};

// Arithmetic mean per named parameter; architectures must match exactly.
Checkpoint average_checkpoints(const std::vector<Checkpoint>& checkpoints);

// Metadata assembly helpers.
std::string meta_block(const std::string& section,
                       const std::vector<std::pair<std::string, std::string>>& kv);
std::string meta_raw_block(const std::string& section, const std::vector<std::string>& lines);

}  // namespace nmtfuse
