#include "wseg/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace wseg::nn {
namespace {

constexpr std::size_t kMagicLen = 5;
constexpr std::size_t kPrefixLen = kMagicLen + 8;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string hex64(std::uint64_t h) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 0; i < 16; ++i) s[static_cast<std::size_t>(i)] = kHex[(h >> (60 - 4 * i)) & 0xF];
  return s;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelGraph<float>& model, const CheckpointMeta& meta) {
  std::vector<std::uint8_t> payload;
  payload.reserve(4 * static_cast<std::size_t>(model.count_params()));
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.params()) {
    params.push_back({{"name", p.name}, {"shape", p.shape}});
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(p.value[i]);
      for (int b = 0; b < 4; ++b) payload.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  }
  const nlohmann::json header = {{"format", kCheckpointMagic},
                                 {"stage", to_string(model.stage)},
                                 {"epoch", meta.epoch},
                                 {"seed", meta.seed},
                                 {"architecture", model.architecture},
                                 {"input_channels", model.input_channels()},
                                 {"layers", model.layers_json()},
                                 {"params", params},
                                 {"payload_fnv1a64", hex64(fnv1a64(payload))},
                                 {"meta", meta.extra}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + kMagicLen);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPrefixLen || std::memcmp(bytes.data(), kCheckpointMagic, kMagicLen) != 0) {
    throw FormatError("not a WSEG1 checkpoint (bad magic)");
  }
  const std::uint64_t header_len = get_u64(bytes.data() + kMagicLen);
  if (header_len > bytes.size() - kPrefixLen) {
    throw CorruptionError("checkpoint header length " + std::to_string(header_len) + " exceeds file size");
  }
  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(bytes.begin() + kPrefixLen, bytes.begin() + kPrefixLen + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  try {
    ck.model = ModelGraph<float>::from_layers_json(ck.header.at("layers"), ck.header.at("input_channels").get<int>());
    ck.model.stage = stage_from_string(ck.header.at("stage").get<std::string>());
    ck.model.architecture = ck.header.at("architecture");
    ck.meta.epoch = ck.header.at("epoch").get<int>();
    ck.meta.seed = ck.header.at("seed").get<std::uint64_t>();
    ck.meta.extra = ck.header.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("checkpoint header incomplete: ") + e.what());
  }
  std::string checksum;
  try {
    const auto& listed = ck.header.at("params");
    const auto& params = ck.model.params();
    if (listed.size() != params.size()) {
      throw CorruptionError("checkpoint lists " + std::to_string(listed.size()) + " parameters, architecture has " +
                            std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (listed[i].at("name").get<std::string>() != params[i].name ||
          listed[i].at("shape").get<std::vector<int>>() != params[i].shape) {
        throw CorruptionError("checkpoint parameter " + std::to_string(i) + " ('" + params[i].name +
                              "') name/shape disagrees with the architecture");
      }
    }
    checksum = ck.header.at("payload_fnv1a64").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("checkpoint parameter list unreadable: ") + e.what());
  }
  auto& params = ck.model.params();
  const std::size_t payload = bytes.size() - kPrefixLen - header_len;
  const std::size_t expected = 4 * static_cast<std::size_t>(ck.model.count_params());
  if (payload != expected) {
    throw CorruptionError("checkpoint payload is " + std::to_string(payload) + " bytes, header implies " +
                          std::to_string(expected));
  }
  const std::uint8_t* p = bytes.data() + kPrefixLen + header_len;
  if (hex64(fnv1a64({p, payload})) != checksum) throw CorruptionError("checkpoint payload checksum mismatch");
  for (auto& param : params) {
    for (Eigen::Index i = 0; i < param.value.size(); ++i, p += 4) {
      const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
                                 static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
      param.value[i] = std::bit_cast<float>(bits);
    }
  }
  return ck;
}

void save_checkpoint(const ModelGraph<float>& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string checkpoint_id(const ModelGraph<float>& model, const CheckpointMeta& meta) {
  return hex64(fnv1a64(serialize_checkpoint(model, meta)));
}

}  // namespace wseg::nn
