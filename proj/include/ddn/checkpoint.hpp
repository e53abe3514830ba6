#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "ddn/errors.hpp"
#include "ddn/io.hpp"
#include "ddn/model.hpp"

namespace ddn {

inline constexpr char kCheckpointMagic[4] = {'D', 'D', 'N', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  Ablation ablation = Ablation::kFull;
  int epochs = 0;
  float final_lr = 0.0f;
  std::uint64_t seed = 0;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
};

namespace detail {

inline std::string fmt_float(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_float(v[i], "%.17g");
  }
  return out;
}

inline std::vector<double> parse_list(const std::string& s, std::size_t offset) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(s.substr(pos), &used));
    } catch (const std::exception&) {
      throw FormatError(offset, "checkpoint: bad numeric list");
    }
    pos += used;
    if (pos < s.size() && s[pos] == ',') ++pos;
  }
  return out;
}

}  // namespace detail

// "DDN1" checkpoint: magic, u32 version, u32 header length, UTF-8 key=value
// header lines, then every parameter tensor as little-endian f32 in the
// model's declared order. Bit-exact round trip.
inline std::string serialize_checkpoint(const DdnModel<float>& model, const CheckpointMeta& meta) {
  const ModelConfig& cfg = model.config();
  std::string header;
  header += "feature_dim=" + std::to_string(cfg.feature_dim) + "\n";
  header += "latent_dim=" + std::to_string(cfg.latent_dim) + "\n";
  header += "hidden_dim=" + std::to_string(cfg.hidden_dim) + "\n";
  header += "num_actions=" + std::to_string(cfg.num_actions) + "\n";
  header += "alpha=" + detail::fmt_float(cfg.alpha, "%.9g") + "\n";
  header += "horizon=" + std::to_string(cfg.horizon) + "\n";
  header += "teacher_forcing=" + std::to_string(cfg.teacher_forcing ? 1 : 0) + "\n";
  header += "ablation=" + std::string(ablation_name(meta.ablation)) + "\n";
  header += "epochs=" + std::to_string(meta.epochs) + "\n";
  header += "final_lr=" + detail::fmt_float(meta.final_lr, "%.9g") + "\n";
  header += "seed=" + std::to_string(meta.seed) + "\n";
  header += "train_loss=" + detail::fmt_list(meta.train_loss) + "\n";
  header += "val_loss=" + detail::fmt_list(meta.val_loss) + "\n";

  BinaryWriter w;
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.bytes(header);
  for (const Tensor<float>* p : model.parameters()) {
    for (std::size_t i = 0; i < p->numel(); ++i) w.f32((*p)[i]);
  }
  return w.str();
}

inline void save_checkpoint(const DdnModel<float>& model, const CheckpointMeta& meta,
                            const std::string& path) {
  BinaryWriter w;
  w.bytes(serialize_checkpoint(model, meta));
  w.to_file(path);
}

struct LoadedCheckpoint {
  DdnModel<float> model;
  CheckpointMeta meta;
};

inline LoadedCheckpoint parse_checkpoint(BinaryReader& r) {
  r.expect_magic(kCheckpointMagic, "checkpoint");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError(r.offset() - 4, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t header_len = r.u32("header length");
  const std::size_t header_at = r.offset();
  const std::string header = r.bytes(header_len, "header");

  std::map<std::string, std::string> kv;
  std::size_t pos = 0;
  while (pos < header.size()) {
    std::size_t nl = header.find('\n', pos);
    if (nl == std::string::npos) nl = header.size();
    const std::string line = header.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(header_at, "checkpoint: malformed header line '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw FormatError(header_at, std::string("checkpoint: missing header key '") + key + "'");
    }
    return it->second;
  };

  ModelConfig cfg;
  CheckpointMeta meta;
  try {
    cfg.feature_dim = std::stoul(need("feature_dim"));
    cfg.latent_dim = std::stoul(need("latent_dim"));
    cfg.hidden_dim = std::stoul(need("hidden_dim"));
    cfg.num_actions = std::stoul(need("num_actions"));
    cfg.alpha = std::stof(need("alpha"));
    cfg.horizon = std::stoul(need("horizon"));
    cfg.teacher_forcing = need("teacher_forcing") == "1";
    meta.ablation = ablation_from_name(need("ablation"));
    meta.epochs = std::stoi(need("epochs"));
    meta.final_lr = std::stof(need("final_lr"));
    meta.seed = std::stoull(need("seed"));
    meta.train_loss = detail::parse_list(need("train_loss"), header_at);
    meta.val_loss = detail::parse_list(need("val_loss"), header_at);
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(header_at, std::string("checkpoint: bad header value: ") + e.what());
  }

  LoadedCheckpoint out{DdnModel<float>(cfg, 0), meta};
  for (Tensor<float>* p : out.model.parameters()) {
    for (std::size_t i = 0; i < p->numel(); ++i) (*p)[i] = r.f32("parameter");
  }
  r.expect_eof("checkpoint");
  return out;
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  BinaryReader r = BinaryReader::from_file(path);
  return parse_checkpoint(r);
}

}  // namespace ddn
