#pragma once

#include <cstdint>
#include <string>

#include "uavd/model.hpp"
#include "uavd/tokenizer.hpp"

namespace uavd {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ModelState model;
  Tokenizer tokenizer;
  std::string name;  // free-form label, e.g. "teacher"
};

/// File layout: one line of JSON header (format version, ModelConfig, tokenizer
/// hash and vocabulary, step, tensor manifest with shapes and byte offsets),
/// then raw little-endian f32 tensor data. Offsets are relative to the first
/// data byte.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
/// Throws CheckpointError on any mismatch, truncation or unreadable file.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace uavd
