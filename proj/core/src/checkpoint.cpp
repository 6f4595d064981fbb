#include "uavd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uavd/error.hpp"

namespace uavd {

using ojson = nlohmann::ordered_json;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_f32_le(std::string& out, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

float get_f32_le(const char* p) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const ModelState& m = ckpt.model;
  ojson header;
  header["format_version"] = kCheckpointFormatVersion;
  header["name"] = ckpt.name;
  header["config"] = ojson{{"n_layers", m.config.n_layers},       {"d_model", m.config.d_model},
                           {"n_heads", m.config.n_heads},         {"d_ff", m.config.d_ff},
                           {"vocab_size", m.config.vocab_size},   {"max_seq_len", m.config.max_seq_len},
                           {"precision", "f32"}};
  header["tokenizer_hash"] = hex64(ckpt.tokenizer.hash());
  header["vocab"] = ckpt.tokenizer.vocab();
  header["step"] = m.step;
  header["tensors"] = ojson::array();
  for (const auto& t : m.layout.tensors)
    header["tensors"].push_back(ojson{{"name", t.name}, {"shape", {t.rows, t.cols}}, {"offset", t.offset * 4},
                                      {"bytes", t.size() * 4}});
  std::string out = header.dump();
  out += '\n';
  out.reserve(out.size() + m.params.size() * 4);
  for (float v : m.params) put_f32_le(out, v);
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw CheckpointError("checkpoint has no header line");
  ojson header;
  try {
    header = ojson::parse(bytes.begin(), bytes.begin() + static_cast<long>(nl));
  } catch (const ojson::exception& e) {
    throw CheckpointError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  Checkpoint ck;
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion)
      throw CheckpointError("unsupported checkpoint format version " + std::to_string(version));
    const auto& c = header.at("config");
    ModelConfig cfg;
    cfg.n_layers = c.at("n_layers").get<int>();
    cfg.d_model = c.at("d_model").get<int>();
    cfg.n_heads = c.at("n_heads").get<int>();
    cfg.d_ff = c.at("d_ff").get<int>();
    cfg.vocab_size = c.at("vocab_size").get<int>();
    cfg.max_seq_len = c.at("max_seq_len").get<int>();
    if (c.at("precision").get<std::string>() != "f32") throw CheckpointError("checkpoint tensors must be f32");
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("invalid model config: ") + e.what());
    }
    ck.name = header.value("name", std::string());
    ck.tokenizer = Tokenizer(header.at("vocab").get<std::vector<std::string>>());
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(ck.tokenizer.hash()));
    if (header.at("tokenizer_hash").get<std::string>() != hash) throw CheckpointError("tokenizer hash mismatch");
    if (static_cast<int>(ck.tokenizer.size()) != cfg.vocab_size)
      throw CheckpointError("vocabulary size does not match the model config");

    ck.model = ModelState(cfg);
    ck.model.step = header.at("step").get<long>();
    const auto& manifest = header.at("tensors");
    const auto& layout = ck.model.layout.tensors;
    if (manifest.size() != layout.size()) throw CheckpointError("tensor manifest does not match the config");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& e = manifest[i];
      const auto& t = layout[i];
      const auto shape = e.at("shape").get<std::vector<int>>();
      if (e.at("name").get<std::string>() != t.name || shape.size() != 2 || shape[0] != t.rows ||
          shape[1] != t.cols || e.at("offset").get<std::size_t>() != t.offset * 4 ||
          e.at("bytes").get<std::size_t>() != t.size() * 4)
        throw CheckpointError("tensor '" + t.name + "' does not match the config layout");
    }
  } catch (const ojson::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const TokenizerError& e) {
    throw CheckpointError(std::string("bad vocabulary: ") + e.what());
  }

  const std::size_t expected = ck.model.params.size() * 4;
  const std::size_t available = bytes.size() - nl - 1;
  if (available != expected)
    throw CheckpointError("tensor data is " + std::to_string(available) + " bytes, expected " + std::to_string(expected));
  const char* data = bytes.data() + nl + 1;
  for (std::size_t i = 0; i < ck.model.params.size(); ++i) ck.model.params[i] = get_f32_le(data + 4 * i);
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace uavd
