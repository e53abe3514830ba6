#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ddn/dataset.hpp"
#include "ddn/errors.hpp"
#include "ddn/rng.hpp"
#include "ddn/tensor.hpp"

namespace ddn::synth {

// World state: bitset over the task's predicates.
using WorldState = std::uint32_t;

// Precondition / add / delete predicate sets, one bit per predicate.
struct ActionSchema {
  WorldState pre = 0;
  WorldState add = 0;
  WorldState del = 0;
};

constexpr std::size_t kMaxPredicates = 20;  // bounds the 2^P state tables

// Ground-truth task: actions over binary predicates, uniform initial-state
// distribution, and exemplar goal states per validated horizon.
struct TaskSchema {
  std::uint32_t num_predicates = 0;
  std::vector<ActionSchema> actions;
  std::uint32_t horizon_min = 0;
  std::uint32_t horizon_max = 0;
  std::uint64_t seed = 0;
  std::vector<WorldState> goal_samples;  // one reachable end state per horizon

  std::size_t num_states() const { return std::size_t{1} << num_predicates; }

  bool applicable(WorldState s, std::size_t a) const {
    return (s & actions[a].pre) == actions[a].pre;
  }

  WorldState apply(WorldState s, std::size_t a) const {
    return (s & ~actions[a].del) | actions[a].add;
  }

  void validate() const {
    if (num_predicates < 2 || num_predicates > kMaxPredicates) {
      throw UsageError("schema: predicate count " + std::to_string(num_predicates) +
                       " outside [2, " + std::to_string(kMaxPredicates) + "]");
    }
    if (actions.size() < 2) throw UsageError("schema: need at least 2 actions");
    const WorldState all = static_cast<WorldState>((std::uint64_t{1} << num_predicates) - 1);
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const ActionSchema& a = actions[i];
      if (a.add & a.del) throw UsageError("schema: action " + std::to_string(i) +
                                          " has overlapping add/delete sets");
      if ((a.add | a.del) == 0) throw UsageError("schema: action " + std::to_string(i) +
                                                 " has empty effects");
      if ((a.pre | a.add | a.del) & ~all) {
        throw UsageError("schema: action " + std::to_string(i) + " references predicate >= " +
                         std::to_string(num_predicates));
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Exact reachability over the schema's state space (used for curation and by
// test oracles; the learned model never sees any of this).
// ---------------------------------------------------------------------------

// BFS distance from s0 to every state; unreachable = -1.
inline std::vector<std::int32_t> bfs_distances(const TaskSchema& schema, WorldState s0) {
  std::vector<std::int32_t> dist(schema.num_states(), -1);
  std::queue<WorldState> q;
  dist[s0] = 0;
  q.push(s0);
  while (!q.empty()) {
    const WorldState s = q.front();
    q.pop();
    for (std::size_t a = 0; a < schema.actions.size(); ++a) {
      if (!schema.applicable(s, a)) continue;
      const WorldState s2 = schema.apply(s, a);
      if (dist[s2] < 0) {
        dist[s2] = dist[s] + 1;
        q.push(s2);
      }
    }
  }
  return dist;
}

// Number of distinct action sequences of exactly `len` steps from s0 to goal,
// saturating at 2 (only 0/1/many matters to callers).
inline std::uint32_t count_paths(const TaskSchema& schema, WorldState s0, WorldState goal,
                                 std::size_t len) {
  std::vector<std::uint32_t> ways(schema.num_states(), 0);
  ways[s0] = 1;
  for (std::size_t step = 0; step < len; ++step) {
    std::vector<std::uint32_t> next(schema.num_states(), 0);
    for (WorldState s = 0; s < ways.size(); ++s) {
      if (!ways[s]) continue;
      for (std::size_t a = 0; a < schema.actions.size(); ++a) {
        if (!schema.applicable(s, a)) continue;
        const WorldState s2 = schema.apply(s, a);
        next[s2] = std::min<std::uint32_t>(2, next[s2] + ways[s]);
      }
    }
    ways = std::move(next);
  }
  return ways[goal];
}

// A rollout endpoint pair is unambiguous when the demo length equals the BFS
// distance and exactly one action sequence of that length connects the pair.
inline bool unique_shortest(const TaskSchema& schema, WorldState s0, WorldState goal,
                            std::size_t len) {
  const auto dist = bfs_distances(schema, s0);
  if (dist[goal] != static_cast<std::int32_t>(len)) return false;
  return count_paths(schema, s0, goal, len) == 1;
}

// ---------------------------------------------------------------------------
// Demo rollouts.
// ---------------------------------------------------------------------------

struct Demo {
  std::vector<WorldState> states;      // H+1
  std::vector<std::int32_t> actions;   // H
};

// Random walk of H applicable, state-changing actions from a random initial
// state. Demonstrations do not backtrack: each step is chosen uniformly
// among the actions that keep the walk a shortest path from its start state.
// Restarts from a fresh initial state on dead ends; gives up after
// `max_tries` restarts.
inline Demo rollout_demo(const TaskSchema& schema, Rng& rng, std::size_t horizon,
                         int max_tries = 1000) {
  if (horizon < 1) throw UsageError("rollout_demo: horizon must be >= 1");
  const WorldState state_mask =
      static_cast<WorldState>((std::uint64_t{1} << schema.num_predicates) - 1);
  std::vector<std::size_t> options;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Demo demo;
    WorldState s = static_cast<WorldState>(rng.next_u64()) & state_mask;
    const std::vector<std::int32_t> dist = bfs_distances(schema, s);
    demo.states.push_back(s);
    bool dead = false;
    for (std::size_t step = 0; step < horizon; ++step) {
      options.clear();
      for (std::size_t a = 0; a < schema.actions.size(); ++a) {
        if (!schema.applicable(s, a)) continue;
        const WorldState s2 = schema.apply(s, a);
        if (s2 != s && dist[s2] == static_cast<std::int32_t>(step + 1)) options.push_back(a);
      }
      if (options.empty()) {
        dead = true;
        break;
      }
      const std::size_t a = options[rng.below(options.size())];
      s = schema.apply(s, a);
      demo.states.push_back(s);
      demo.actions.push_back(static_cast<std::int32_t>(a));
    }
    if (!dead) return demo;
  }
  throw GenerationError("rollout_demo: no applicable walk of length " + std::to_string(horizon) +
                        " after " + std::to_string(max_tries) + " tries");
}

inline Demo rollout_demo(const TaskSchema& schema, std::uint64_t seed, std::size_t horizon) {
  Rng rng(seed);
  return rollout_demo(schema, rng, horizon);
}

// ---------------------------------------------------------------------------
// Task sampling.
// ---------------------------------------------------------------------------

// Rejection-sample a schema until, for every horizon in range, at least 90%
// of sampled demos have an unambiguous (unique shortest) endpoint pair.
// Actions consume their whole precondition set and add fresh predicates;
// overlapping footprints keep action order significant, which is what makes
// the screen attainable at all.
inline TaskSchema sample_task(std::uint64_t seed, std::uint32_t num_predicates,
                              std::uint32_t num_actions, std::uint32_t horizon_min,
                              std::uint32_t horizon_max, int max_tries = 3000) {
  if (num_actions < 2 || num_predicates < 2) {
    throw UsageError("sample_task: need at least 2 predicates and 2 actions");
  }
  if (num_predicates > kMaxPredicates) {
    throw CapacityError("sample_task: at most " + std::to_string(kMaxPredicates) + " predicates");
  }
  if (horizon_min < 1 || horizon_min > horizon_max) {
    throw UsageError("sample_task: bad horizon range");
  }
  Rng rng(seed);
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Rng task_rng = rng.split();
    TaskSchema schema;
    schema.num_predicates = num_predicates;
    schema.horizon_min = horizon_min;
    schema.horizon_max = horizon_max;
    schema.seed = seed;
    bool ok = true;
    for (std::uint32_t i = 0; i < num_actions && ok; ++i) {
      ActionSchema a;
      for (int tries = 0;; ++tries) {
        if (tries >= 64) {
          ok = false;
          break;
        }
        a = ActionSchema{};
        for (std::size_t k = 0; k < 2; ++k) {
          a.pre |= WorldState{1} << task_rng.below(num_predicates);
        }
        // Wide erase beyond the consumed preconditions: big overlapping
        // footprints keep paths from reconverging, which is what the
        // uniqueness screen needs.
        a.del = a.pre;
        for (std::size_t k = 0; k < 3; ++k) {
          a.del |= WorldState{1} << task_rng.below(num_predicates);
        }
        for (std::size_t k = 0; k < 3; ++k) {
          a.add |= WorldState{1} << task_rng.below(num_predicates);
        }
        a.add &= ~a.del;
        if (a.add == 0) continue;
        // Interchangeable duplicates always break uniqueness.
        bool duplicate = false;
        for (const ActionSchema& other : schema.actions) {
          duplicate |= other.add == a.add && other.del == a.del;
        }
        if (duplicate) continue;
        break;
      }
      schema.actions.push_back(a);
    }
    if (!ok) continue;

    // Learnability screen per horizon.
    schema.goal_samples.clear();
    Rng probe_rng = task_rng.split();
    for (std::uint32_t h = horizon_min; h <= horizon_max && ok; ++h) {
      constexpr int kProbes = 50;
      int unique = 0;
      int sampled = 0;
      WorldState goal_sample = 0;
      bool have_goal = false;
      for (int k = 0; k < kProbes; ++k) {
        Demo demo;
        try {
          demo = rollout_demo(schema, probe_rng, h, 25);
        } catch (const GenerationError&) {
          continue;
        }
        ++sampled;
        if (unique_shortest(schema, demo.states.front(), demo.states.back(), h)) {
          ++unique;
          if (!have_goal) {
            goal_sample = demo.states.back();
            have_goal = true;
          }
        }
      }
      ok = sampled >= kProbes / 2 && unique * 10 >= sampled * 9 && have_goal;
      if (ok) schema.goal_samples.push_back(goal_sample);
    }
    if (!ok) continue;
    schema.validate();
    return schema;
  }
  throw GenerationError("sample_task: no learnable schema after " + std::to_string(max_tries) +
                        " attempts");
}

// ---------------------------------------------------------------------------
// Observation rendering: obs = W * s + noise, W column-orthonormal.
// ---------------------------------------------------------------------------

struct ObservationRenderer {
  Tensor<float> w;  // [D, P]
  float sigma = 0.0f;

  std::size_t feature_dim() const { return w.rows(); }
  std::size_t num_predicates() const { return w.cols(); }
};

inline ObservationRenderer make_renderer(std::uint64_t seed, std::size_t feature_dim,
                                         std::size_t num_predicates, float sigma) {
  if (feature_dim < num_predicates) {
    throw UsageError("renderer: feature dim must be >= predicate count for full column rank");
  }
  Rng rng(seed);
  ObservationRenderer r;
  r.sigma = sigma;
  r.w = Tensor<float>({feature_dim, num_predicates});
  // Column-wise Gram-Schmidt on Gaussian draws guarantees full column rank.
  std::vector<std::vector<double>> cols(num_predicates, std::vector<double>(feature_dim));
  for (std::size_t c = 0; c < num_predicates; ++c) {
    for (std::size_t d = 0; d < feature_dim; ++d) cols[c][d] = rng.normal();
    for (std::size_t prev = 0; prev < c; ++prev) {
      double dot = 0;
      for (std::size_t d = 0; d < feature_dim; ++d) dot += cols[c][d] * cols[prev][d];
      for (std::size_t d = 0; d < feature_dim; ++d) cols[c][d] -= dot * cols[prev][d];
    }
    double norm = 0;
    for (std::size_t d = 0; d < feature_dim; ++d) norm += cols[c][d] * cols[c][d];
    norm = std::sqrt(norm);
    for (std::size_t d = 0; d < feature_dim; ++d) cols[c][d] /= norm;
  }
  for (std::size_t d = 0; d < feature_dim; ++d) {
    for (std::size_t c = 0; c < num_predicates; ++c) {
      r.w.at(d, c) = static_cast<float>(cols[c][d]);
    }
  }
  return r;
}

inline Tensor<float> render(WorldState s, const ObservationRenderer& r, Rng& noise) {
  const std::size_t d = r.feature_dim(), p = r.num_predicates();
  Tensor<float> obs({d});
  for (std::size_t i = 0; i < d; ++i) {
    float acc = 0.0f;
    const float* wi = r.w.row(i);
    for (std::size_t j = 0; j < p; ++j) {
      if (s & (WorldState{1} << j)) acc += wi[j];
    }
    obs[i] = acc + (r.sigma > 0.0f ? r.sigma * static_cast<float>(noise.normal()) : 0.0f);
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Dataset curation.
// ---------------------------------------------------------------------------

struct DatasetPair {
  Dataset train;
  Dataset test;
};

// N demos, horizons cycling over [horizon_min, horizon_max], rendered and
// split 70/30 by sequence. With `unique_only` (the default) every demo's
// endpoint pair admits exactly one shortest completion, so plan evaluation
// has a well-defined ground truth.
inline DatasetPair make_dataset(const TaskSchema& schema, const ObservationRenderer& renderer,
                                std::size_t n_sequences, std::uint64_t data_seed,
                                std::uint32_t horizon_min, std::uint32_t horizon_max,
                                bool unique_only = true) {
  if (n_sequences < 10) {
    throw UsageError("make_dataset: N too small (need at least 10 sequences)");
  }
  if (horizon_min < 1 || horizon_min > horizon_max) {
    throw UsageError("make_dataset: bad horizon range");
  }
  schema.validate();
  Rng root(data_seed);
  Rng demo_rng = root.split();
  Rng noise_rng = root.split();
  Rng split_rng = root.split();

  const std::uint32_t span = horizon_max - horizon_min + 1;
  std::vector<Sequence> seqs;
  seqs.reserve(n_sequences);
  for (std::size_t i = 0; i < n_sequences; ++i) {
    const std::size_t horizon = horizon_min + (i % span);
    Demo demo;
    bool found = false;
    for (int tries = 0; tries < 1000 && !found; ++tries) {
      demo = rollout_demo(schema, demo_rng, horizon);
      found = !unique_only ||
              unique_shortest(schema, demo.states.front(), demo.states.back(), horizon);
    }
    if (!found) {
      throw GenerationError("make_dataset: no unambiguous demo of horizon " +
                            std::to_string(horizon) + " in 1000 tries");
    }
    Sequence seq;
    seq.obs = Tensor<float>({demo.states.size(), renderer.feature_dim()});
    for (std::size_t t = 0; t < demo.states.size(); ++t) {
      Tensor<float> o = render(demo.states[t], renderer, noise_rng);
      float* dst = seq.obs.row(t);
      for (std::size_t j = 0; j < o.numel(); ++j) dst[j] = o[j];
    }
    seq.actions = demo.actions;
    seqs.push_back(std::move(seq));
  }

  std::vector<std::size_t> order(n_sequences);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  split_rng.shuffle(order.begin(), order.end());
  const std::size_t n_train = n_sequences * 7 / 10;

  DatasetPair out;
  out.train.feature_dim = out.test.feature_dim = renderer.feature_dim();
  out.train.num_actions = out.test.num_actions = schema.actions.size();
  out.train.split = "train";
  out.test.split = "test";
  for (std::size_t i = 0; i < n_sequences; ++i) {
    (i < n_train ? out.train : out.test).seqs.push_back(std::move(seqs[order[i]]));
  }
  return out;
}

// Horizons taken from the schema's validated range.
inline DatasetPair make_dataset(const TaskSchema& schema, const ObservationRenderer& renderer,
                                std::size_t n_sequences, std::uint64_t data_seed,
                                bool unique_only = true) {
  return make_dataset(schema, renderer, n_sequences, data_seed, schema.horizon_min,
                      schema.horizon_max, unique_only);
}

// ---------------------------------------------------------------------------
// Schema file: UTF-8 key=value lines plus one "action" line per action.
// ---------------------------------------------------------------------------

inline std::string predicate_list(WorldState mask) {
  std::string out;
  for (std::uint32_t p = 0; p < 32; ++p) {
    if (mask & (WorldState{1} << p)) {
      if (!out.empty()) out += ",";
      out += std::to_string(p);
    }
  }
  return out;
}

inline std::string serialize_schema(const TaskSchema& s) {
  std::ostringstream out;
  out << "schema=1\n";
  out << "predicates=" << s.num_predicates << "\n";
  out << "actions=" << s.actions.size() << "\n";
  out << "horizon_min=" << s.horizon_min << "\n";
  out << "horizon_max=" << s.horizon_max << "\n";
  out << "seed=" << s.seed << "\n";
  out << "goal_samples=";
  for (std::size_t i = 0; i < s.goal_samples.size(); ++i) {
    out << (i ? "," : "") << s.goal_samples[i];
  }
  out << "\n";
  for (std::size_t i = 0; i < s.actions.size(); ++i) {
    out << "action " << i << " pre=" << predicate_list(s.actions[i].pre)
        << " add=" << predicate_list(s.actions[i].add)
        << " del=" << predicate_list(s.actions[i].del) << "\n";
  }
  return out.str();
}

inline void write_schema(const TaskSchema& s, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot open for writing: " + path);
  out << serialize_schema(s);
}

namespace detail {

inline WorldState parse_predicates(const std::string& list, std::size_t offset) {
  WorldState mask = 0;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &used);
    } catch (const std::exception&) {
      throw FormatError(offset, "schema: bad predicate index '" + tok + "'");
    }
    if (used != tok.size() || v >= 32) {
      throw FormatError(offset, "schema: bad predicate index '" + tok + "'");
    }
    mask |= WorldState{1} << v;
  }
  return mask;
}

}  // namespace detail

inline TaskSchema parse_schema(const std::string& text) {
  TaskSchema s;
  std::size_t offset = 0;
  std::size_t declared_actions = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("action ", 0) == 0) {
      std::istringstream ls(line);
      std::string word, pre, add, del;
      std::size_t idx = 0;
      ls >> word >> idx >> pre >> add >> del;
      if (!ls || pre.rfind("pre=", 0) != 0 || add.rfind("add=", 0) != 0 ||
          del.rfind("del=", 0) != 0) {
        throw FormatError(line_start, "schema: malformed action line '" + line + "'");
      }
      if (idx != s.actions.size()) {
        throw FormatError(line_start, "schema: action index " + std::to_string(idx) +
                                          " out of order");
      }
      ActionSchema a;
      a.pre = detail::parse_predicates(pre.substr(4), line_start);
      a.add = detail::parse_predicates(add.substr(4), line_start);
      a.del = detail::parse_predicates(del.substr(4), line_start);
      s.actions.push_back(a);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(line_start, "schema: expected key=value, got '" + line + "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "schema") {
        if (value != "1") throw FormatError(line_start, "schema: unsupported version " + value);
      } else if (key == "predicates") {
        s.num_predicates = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "actions") {
        declared_actions = std::stoul(value);
      } else if (key == "horizon_min") {
        s.horizon_min = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "horizon_max") {
        s.horizon_max = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "seed") {
        s.seed = std::stoull(value);
      } else if (key == "goal_samples") {
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          if (!tok.empty()) s.goal_samples.push_back(static_cast<WorldState>(std::stoul(tok)));
        }
      } else {
        throw FormatError(line_start, "schema: unknown key '" + key + "'");
      }
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception&) {
      throw FormatError(line_start, "schema: bad value for key '" + key + "'");
    }
  }
  if (declared_actions != s.actions.size()) {
    throw FormatError(offset, "schema: declared " + std::to_string(declared_actions) +
                                  " actions, found " + std::to_string(s.actions.size()));
  }
  s.validate();
  return s;
}

inline TaskSchema read_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_schema(text);
}

}  // namespace ddn::synth
