#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ddn/errors.hpp"
#include "ddn/io.hpp"
#include "ddn/model.hpp"
#include "ddn/tensor.hpp"

namespace ddn {

// One demonstration: H+1 observations (rows of `obs`) and H action ids.
struct Sequence {
  Tensor<float> obs;                  // [L, D]
  std::vector<std::int32_t> actions;  // length L-1

  std::size_t length() const { return obs.rows(); }
  std::size_t horizon() const { return actions.size(); }

  Tensor<float> observation(std::size_t i) const {
    Tensor<float> o({obs.cols()});
    const float* src = obs.row(i);
    for (std::size_t j = 0; j < obs.cols(); ++j) o[j] = src[j];
    return o;
  }
};

struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t num_actions = 0;
  std::vector<Sequence> seqs;
  std::string split;  // informational tag, not serialized

  void validate() const {
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const Sequence& s = seqs[i];
      if (s.obs.rank() != 2 || s.obs.cols() != feature_dim) {
        throw UsageError("sequence " + std::to_string(i) + ": observation dim " +
                         std::to_string(s.obs.cols()) + " != " + std::to_string(feature_dim));
      }
      if (s.length() != s.actions.size() + 1) {
        throw UsageError("sequence " + std::to_string(i) + ": " + std::to_string(s.length()) +
                         " observations for " + std::to_string(s.actions.size()) + " actions");
      }
      for (std::int32_t a : s.actions) {
        if (a < 0 || static_cast<std::size_t>(a) >= num_actions) {
          throw UsageError("sequence " + std::to_string(i) + ": action id " + std::to_string(a) +
                           " out of range [0, " + std::to_string(num_actions) + ")");
        }
      }
    }
  }
};

// ---------------------------------------------------------------------------
// "DDS1" dataset file: magic, u32 version=1, u32 D, u32 A, u32 N; then per
// sequence u32 L, L*D little-endian f32 observations, (L-1) u32 action ids.
// ---------------------------------------------------------------------------

inline constexpr char kDatasetMagic[4] = {'D', 'D', 'S', '1'};
inline constexpr std::uint32_t kDatasetVersion = 1;

inline std::string serialize_dataset(const Dataset& d) {
  BinaryWriter w;
  w.magic(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(d.feature_dim));
  w.u32(static_cast<std::uint32_t>(d.num_actions));
  w.u32(static_cast<std::uint32_t>(d.seqs.size()));
  for (const Sequence& s : d.seqs) {
    w.u32(static_cast<std::uint32_t>(s.length()));
    for (std::size_t i = 0; i < s.obs.numel(); ++i) w.f32(s.obs[i]);
    for (std::int32_t a : s.actions) w.u32(static_cast<std::uint32_t>(a));
  }
  return w.str();
}

inline void write_dataset(const Dataset& d, const std::string& path) {
  d.validate();
  BinaryWriter w;
  w.bytes(serialize_dataset(d));
  w.to_file(path);
}

inline Dataset parse_dataset(BinaryReader& r) {
  Dataset d;
  r.expect_magic(kDatasetMagic, "dataset");
  const std::uint32_t version = r.u32("version");
  if (version != kDatasetVersion) {
    throw FormatError(r.offset() - 4, "unsupported dataset version " + std::to_string(version));
  }
  d.feature_dim = r.u32("feature dim");
  d.num_actions = r.u32("action count");
  const std::uint32_t n = r.u32("sequence count");
  d.seqs.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t len = r.u32("sequence length");
    if (len < 2) {
      throw FormatError(r.offset() - 4, "sequence " + std::to_string(i) +
                                            " shorter than 2 observations");
    }
    Sequence s;
    s.obs = Tensor<float>({len, d.feature_dim});
    for (std::size_t k = 0; k < s.obs.numel(); ++k) s.obs[k] = r.f32("observation");
    s.actions.resize(len - 1);
    for (auto& a : s.actions) {
      const std::size_t at = r.offset();
      const std::uint32_t id = r.u32("action id");
      if (id >= d.num_actions) {
        throw FormatError(at, "sequence " + std::to_string(i) + ": action id " +
                                  std::to_string(id) + " out of range [0, " +
                                  std::to_string(d.num_actions) + ")");
      }
      a = static_cast<std::int32_t>(id);
    }
    d.seqs.push_back(std::move(s));
  }
  r.expect_eof("dataset");
  return d;
}

inline Dataset read_dataset(const std::string& path) {
  BinaryReader r = BinaryReader::from_file(path);
  return parse_dataset(r);
}

// ---------------------------------------------------------------------------
// Batch assembly.
// ---------------------------------------------------------------------------

// Stack sequences sharing one horizon into step-major matrices.
inline SeqBatch<float> make_seq_batch(std::span<const Sequence* const> seqs) {
  if (seqs.empty()) throw UsageError("make_seq_batch: empty batch");
  const std::size_t h = seqs.front()->horizon();
  const std::size_t d = seqs.front()->obs.cols();
  SeqBatch<float> b;
  b.horizon = h;
  b.batch = seqs.size();
  b.obs.assign(h + 1, Tensor<float>({seqs.size(), d}));
  b.act.assign(h, std::vector<std::int32_t>(seqs.size()));
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const Sequence& s = *seqs[i];
    if (s.horizon() != h) throw UsageError("make_seq_batch: mixed horizons in one group");
    for (std::size_t t = 0; t <= h; ++t) {
      const float* src = s.obs.row(t);
      float* dst = b.obs[t].row(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
    for (std::size_t t = 0; t < h; ++t) b.act[t][i] = s.actions[t];
  }
  return b;
}

inline SeqBatch<float> make_seq_batch(const Sequence& s) {
  const Sequence* p = &s;
  return make_seq_batch(std::span<const Sequence* const>(&p, 1));
}

// Sliding-window (o_t, a_t, o_{t+1}) triplets from every sequence.
struct TripletBatch {
  Tensor<float> obs_t;   // [N, D]
  Tensor<float> obs_next;
  std::vector<std::int32_t> actions;
};

inline TripletBatch make_triplets(std::span<const Sequence* const> seqs) {
  std::size_t total = 0;
  for (const Sequence* s : seqs) total += s->horizon();
  if (total == 0) throw UsageError("make_triplets: empty batch");
  const std::size_t d = seqs.front()->obs.cols();
  TripletBatch t;
  t.obs_t = Tensor<float>({total, d});
  t.obs_next = Tensor<float>({total, d});
  t.actions.resize(total);
  std::size_t k = 0;
  for (const Sequence* s : seqs) {
    for (std::size_t i = 0; i < s->horizon(); ++i, ++k) {
      const float* a = s->obs.row(i);
      const float* b = s->obs.row(i + 1);
      float* ta = t.obs_t.row(k);
      float* tb = t.obs_next.row(k);
      for (std::size_t j = 0; j < d; ++j) {
        ta[j] = a[j];
        tb[j] = b[j];
      }
      t.actions[k] = s->actions[i];
    }
  }
  return t;
}

}  // namespace ddn
