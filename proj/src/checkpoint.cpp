#include "morphbench/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace morphbench {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written as native little-endian float32");

namespace {

constexpr char kMagic[4] = {'M', 'B', 'C', 'K'};

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error("checkpoint " + path + ": " + why);
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParameterSet& params) {
  nlohmann::json j;
  j["family"] = meta.family;
  j["config"] = meta.config;
  j["dropout_rate"] = meta.dropout_rate;
  j["seed"] = meta.seed;
  nlohmann::json tensors = nlohmann::json::array();
  for (size_t i = 0; i < params.count(); ++i) {
    tensors.push_back({{"name", params.names[i]},
                       {"shape", params.tensors[i].shape},
                       {"trainable", params.trainable[i] != 0}});
  }
  j["tensors"] = std::move(tensors);
  const std::string header = j.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out.write(kMagic, 4);
  const uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::vector<float> buf;
  for (size_t i = 0; i < params.count(); ++i) {
    const Tensor& t = params.tensors[i];
    buf.resize(static_cast<size_t>(t.size()));
    for (int64_t k = 0; k < t.size(); ++k) buf[static_cast<size_t>(k)] = static_cast<float>(t[k]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) fail(path, "write failed");
}

std::pair<CheckpointMeta, ParameterSet> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) fail(path, "bad magic");
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) fail(path, "truncated header");
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) fail(path, "truncated metadata");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    fail(path, std::string("metadata parse error: ") + e.what());
  }
  CheckpointMeta meta;
  ParameterSet params;
  try {
    meta.family = j.at("family").get<std::string>();
    meta.config = j.at("config").get<std::string>();
    meta.dropout_rate = j.at("dropout_rate").get<double>();
    meta.seed = j.at("seed").get<uint64_t>();
    std::vector<float> buf;
    for (const auto& tj : j.at("tensors")) {
      Tensor t(tj.at("shape").get<std::vector<int>>());
      buf.resize(static_cast<size_t>(t.size()));
      in.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (!in) fail(path, "truncated tensor data for " + tj.at("name").get<std::string>());
      for (int64_t k = 0; k < t.size(); ++k) t[k] = buf[static_cast<size_t>(k)];
      params.add(tj.at("name").get<std::string>(), std::move(t), tj.at("trainable").get<bool>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(path, std::string("metadata field error: ") + e.what());
  }
  if (in.peek() != std::ifstream::traits_type::eof()) fail(path, "trailing bytes");
  return {std::move(meta), std::move(params)};
}

}  // namespace morphbench
