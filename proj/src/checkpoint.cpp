// Copyright 2026 The regionedit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "redit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "redit/digest.hpp"
#include "redit/errors.hpp"

namespace redit::train {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'R', 'D', 'C', 'K'};
constexpr std::size_t kDigestBytes = 32;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos, const std::string& what) {
  if (pos + sizeof(T) > in.size()) throw CorruptFileError(what + ": truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

nlohmann::json arrays_json(const TensorMap& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [name, t] : m) arr.push_back({{"name", name}, {"shape", t.shape()}});
  return arr;
}

std::string raw_sha256(const std::string& data) {
  const std::string hex = sha256_hex(std::string_view(data));
  std::string out;
  for (std::size_t i = 0; i < hex.size(); i += 2) out.push_back(static_cast<char>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  return out;
}

void read_arrays(const nlohmann::json& spec, const std::string& bytes, std::size_t& pos, std::size_t end, TensorMap& dst,
                 const std::string& what) {
  for (const auto& a : spec) {
    const Shape shape = a.at("shape").get<Shape>();
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (pos + n * sizeof(double) > end) throw CorruptFileError(what + ": truncated array payload");
    std::vector<double> data(n);
    if (n > 0) std::memcpy(data.data(), bytes.data() + pos, n * sizeof(double));
    pos += n * sizeof(double);
    dst.emplace(a.at("name").get<std::string>(), Tensor(shape, std::move(data)));
  }
}

}  // namespace

double MetricRow::get(const std::string& key) const {
  const auto it = values.find(key);
  return it == values.end() ? 0.0 : it->second;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json log = nlohmann::json::array();
  for (const auto& row : ckpt.metrics_log) log.push_back({{"step", row.step}, {"values", row.values}});
  const nlohmann::json meta = {
      {"model", ckpt.model},
      {"config", ckpt.config.to_json()},
      {"ablation", ckpt.ablation},
      {"step", ckpt.step},
      {"metrics_log", log},
      {"parameters", arrays_json(ckpt.parameters)},
      {"optimizer", arrays_json(ckpt.optimizer)},
      {"optimizer_step", ckpt.optimizer_step},
  };
  const std::string meta_text = meta.dump();

  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, meta_text.size());
  out += meta_text;
  for (const TensorMap* m : {&ckpt.parameters, &ckpt.optimizer})
    for (const auto& [name, t] : *m)
      out.append(reinterpret_cast<const char*>(t.storage().data()), t.size() * sizeof(double));
  out += raw_sha256(out);
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& what) {
  if (bytes.size() < 16 + kDigestBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CorruptFileError(what + ": not a checkpoint");
  std::size_t pos = 4;
  const auto version = take<std::uint32_t>(bytes, pos, what);
  if (version != kCheckpointVersion)
    throw VersionError(fmt::format("{}: checkpoint version {} (expected {})", what, version, kCheckpointVersion));
  const std::size_t end = bytes.size() - kDigestBytes;
  if (raw_sha256(bytes.substr(0, end)) != bytes.substr(end)) throw CorruptFileError(what + ": checksum mismatch");
  const auto meta_len = take<std::uint64_t>(bytes, pos, what);
  if (pos + meta_len > end) throw CorruptFileError(what + ": truncated metadata");

  Checkpoint c;
  try {
    const auto meta = nlohmann::json::parse(bytes.substr(pos, meta_len));
    pos += meta_len;
    c.model = meta.at("model");
    c.config = TrainConfig::from_json(meta.at("config"), TrainConfig{});
    c.ablation = meta.at("ablation").get<std::vector<std::string>>();
    c.step = meta.at("step").get<std::size_t>();
    for (const auto& row : meta.at("metrics_log"))
      c.metrics_log.push_back({row.at("step").get<std::size_t>(), row.at("values").get<std::map<std::string, double>>()});
    read_arrays(meta.at("parameters"), bytes, pos, end, c.parameters, what);
    read_arrays(meta.at("optimizer"), bytes, pos, end, c.optimizer, what);
    c.optimizer_step = meta.at("optimizer_step").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError(fmt::format("{}: bad metadata: {}", what, e.what()));
  }
  if (pos != end) throw CorruptFileError(what + ": trailing bytes");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot move checkpoint into {}: {}", path, ec.message()));
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto raw = read_file_bytes(path);
  return deserialize_checkpoint(std::string(raw.begin(), raw.end()), path);
}

std::string metrics_csv(const std::vector<MetricRow>& log) {
  std::string out = "step";
  for (const auto& c : kMetricColumns) out += "," + c;
  out += '\n';
  for (const auto& row : log) {
    out += std::to_string(row.step);
    for (const auto& c : kMetricColumns) out += fmt::format(",{}", row.get(c));
    out += '\n';
  }
  return out;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << metrics_csv(log);
  if (!out) throw IoError("failed writing " + path);
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    MetricRow row;
    std::getline(ss, cell, ',');
    row.step = std::stoull(cell);
    for (const auto& c : kMetricColumns) {
      if (!std::getline(ss, cell, ',')) throw CorruptFileError(path + ": short metrics row");
      row.values[c] = std::stod(cell);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace redit::train
