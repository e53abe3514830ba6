#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ddn/baselines.hpp"
#include "ddn/checkpoint.hpp"
#include "ddn/dataset.hpp"
#include "ddn/errors.hpp"
#include "ddn/eval.hpp"
#include "ddn/metrics.hpp"
#include "ddn/model.hpp"
#include "ddn/planner.hpp"
#include "ddn/synth.hpp"
#include "ddn/train.hpp"
#include "ddn/walkthrough.hpp"

namespace ddn::cli {

// Resolved run configuration. Every key is legal in a config file and as a
// flag; unknown keys are rejected. The full set is echoed into every report.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t feature_dim = 64;   // D; desk-scale default (3200 = source-data parity)
  std::size_t num_actions = 12;   // A
  std::size_t num_predicates = 8; // P_n
  std::size_t latent_dim = 128;
  double alpha = 0.001;
  double lr = 1e-4;
  std::size_t batch = 256;
  int epochs = 200;
  std::size_t beta = 0;      // planner iterations; 0 = 20 * H
  std::size_t eta = 20;      // beam width
  double epsilon = 1e-5;     // goal threshold
  std::size_t k_b = 0;       // branching; 0 = min(A, 20)
  std::vector<std::size_t> horizons = {3};
  std::size_t n = 500;       // sequences to generate
  double sigma = 0.05;       // observation noise
  std::string ablation = "full";
  bool teacher_forcing = false;
  std::string policy = "ddn";  // plan subcommand: ddn | greedy | random | rb | rnn
  int threads = 1;
  std::string out_dir = ".";
  std::string data;        // dataset path
  std::string train_data;  // training dataset (retrieval index)
  std::string checkpoint;  // model path
  std::string input;       // input artifact for eval / inspect
  std::string out;         // output path override

  std::string horizons_str() const {
    std::string s;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(horizons[i]);
    }
    return s;
  }

  std::vector<std::pair<std::string, std::string>> echo() const {
    auto num = [](double v) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.9g", v);
      return std::string(buf);
    };
    return {
        {"seed", std::to_string(seed)},
        {"D", std::to_string(feature_dim)},
        {"A", std::to_string(num_actions)},
        {"P_n", std::to_string(num_predicates)},
        {"latent_dim", std::to_string(latent_dim)},
        {"alpha", num(alpha)},
        {"lr", num(lr)},
        {"batch", std::to_string(batch)},
        {"epochs", std::to_string(epochs)},
        {"beta", std::to_string(beta)},
        {"eta", std::to_string(eta)},
        {"epsilon", num(epsilon)},
        {"k_b", std::to_string(k_b)},
        {"horizons", horizons_str()},
        {"n", std::to_string(n)},
        {"sigma", num(sigma)},
        {"ablation", ablation},
        {"teacher_forcing", teacher_forcing ? "1" : "0"},
        {"policy", policy},
        {"threads", std::to_string(threads)},
        {"out_dir", out_dir},
        {"data", data},
        {"train_data", train_data},
        {"checkpoint", checkpoint},
        {"input", input},
        {"out", out},
    };
  }
};

inline std::vector<std::size_t> parse_horizons(const std::string& spec) {
  std::vector<std::size_t> out;
  const auto add_range = [&](const std::string& tok) {
    const auto colon = tok.find(':');
    try {
      if (colon == std::string::npos) {
        out.push_back(std::stoul(tok));
      } else {
        const std::size_t lo = std::stoul(tok.substr(0, colon));
        const std::size_t hi = std::stoul(tok.substr(colon + 1));
        if (lo > hi) throw ConfigError("horizons: empty range '" + tok + "'");
        for (std::size_t h = lo; h <= hi; ++h) out.push_back(h);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("horizons: cannot parse '" + tok + "'");
    }
  };
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) add_range(tok);
  }
  if (out.empty()) throw ConfigError("horizons: empty list");
  for (std::size_t h : out) {
    if (h < 1) throw ConfigError("horizons: must be >= 1");
  }
  return out;
}

// Apply one key=value pair; unknown keys are configuration errors.
inline void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "D") cfg.feature_dim = std::stoul(value);
    else if (key == "A") cfg.num_actions = std::stoul(value);
    else if (key == "P_n") cfg.num_predicates = std::stoul(value);
    else if (key == "latent_dim") cfg.latent_dim = std::stoul(value);
    else if (key == "alpha") cfg.alpha = std::stod(value);
    else if (key == "lr") cfg.lr = std::stod(value);
    else if (key == "batch") cfg.batch = std::stoul(value);
    else if (key == "epochs") cfg.epochs = std::stoi(value);
    else if (key == "beta") cfg.beta = std::stoul(value);
    else if (key == "eta") cfg.eta = std::stoul(value);
    else if (key == "epsilon") cfg.epsilon = std::stod(value);
    else if (key == "k_b") cfg.k_b = std::stoul(value);
    else if (key == "horizons") cfg.horizons = parse_horizons(value);
    else if (key == "n") cfg.n = std::stoul(value);
    else if (key == "sigma") cfg.sigma = std::stod(value);
    else if (key == "ablation") cfg.ablation = value;
    else if (key == "teacher_forcing") cfg.teacher_forcing = value == "1" || value == "true";
    else if (key == "policy") cfg.policy = value;
    else if (key == "threads") cfg.threads = std::stoi(value);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "data") cfg.data = value;
    else if (key == "train_data") cfg.train_data = value;
    else if (key == "checkpoint") cfg.checkpoint = value;
    else if (key == "input") cfg.input = value;
    else if (key == "out") cfg.out = value;
    else throw ConfigError("unknown config key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value for config key '" + key + "': '" + value + "'");
  }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config file: expected key=value, got '" + line + "'");
    }
    apply_key(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

namespace detail {

inline std::string echo_comments(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg.echo()) out += "# " + k + "=" + v + "\n";
  return out;
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw UsageError("cannot open for writing: " + path);
  f << content;
  if (!f) throw UsageError("write failed: " + path);
}

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string join_ids(const std::vector<std::int32_t>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += " ";
    s += std::to_string(ids[i]);
  }
  return s;
}

inline std::vector<std::int32_t> split_ids(const std::string& s) {
  std::vector<std::int32_t> out;
  std::stringstream ss(s);
  std::int32_t v;
  while (ss >> v) out.push_back(v);
  return out;
}

inline std::string resolved_out(const RunConfig& cfg, const std::string& fallback) {
  if (!cfg.out.empty()) return cfg.out;
  return (std::filesystem::path(cfg.out_dir) / fallback).string();
}

// Run fn(i) for i in [0, n) on cfg.threads workers; results land in order.
template <typename Fn>
void parallel_for(int threads, std::size_t n, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::future<void>> futs;
  const int workers = std::min<int>(threads, static_cast<int>(n));
  futs.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) futs.push_back(std::async(std::launch::async, worker));
  for (auto& f : futs) f.get();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// gen: sample a task, render demonstrations, write train/test datasets.
// ---------------------------------------------------------------------------
inline void cmd_gen(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.n < 10) throw UsageError("gen: N too small (need at least 10 sequences)");
  Rng root(cfg.seed);
  const std::uint64_t schema_seed = root.next_u64();
  const std::uint64_t render_seed = root.next_u64();
  const std::uint64_t data_seed = root.next_u64();

  const std::size_t h_min = *std::min_element(cfg.horizons.begin(), cfg.horizons.end());
  const std::size_t h_max = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
  synth::TaskSchema schema = synth::sample_task(
      schema_seed, static_cast<std::uint32_t>(cfg.num_predicates),
      static_cast<std::uint32_t>(cfg.num_actions), static_cast<std::uint32_t>(h_min),
      static_cast<std::uint32_t>(h_max));
  synth::ObservationRenderer renderer = synth::make_renderer(
      render_seed, cfg.feature_dim, cfg.num_predicates, static_cast<float>(cfg.sigma));
  synth::DatasetPair pair = synth::make_dataset(schema, renderer, cfg.n, data_seed);

  std::filesystem::create_directories(cfg.out_dir);
  const auto dir = std::filesystem::path(cfg.out_dir);
  write_dataset(pair.train, (dir / "train.dds").string());
  write_dataset(pair.test, (dir / "test.dds").string());
  synth::write_schema(schema, (dir / "schema.txt").string());

  log << "gen: N=" << cfg.n << " D=" << cfg.feature_dim << " A=" << cfg.num_actions
      << " P_n=" << cfg.num_predicates << " horizons=" << cfg.horizons_str()
      << " sigma=" << cfg.sigma << "\n";
  log << "gen: train=" << pair.train.seqs.size() << " sequences, test=" << pair.test.seqs.size()
      << " sequences -> " << cfg.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// train: fit a model on a dataset, write checkpoint + per-epoch loss CSV.
// ---------------------------------------------------------------------------
inline void cmd_train(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.data.empty()) throw ConfigError("train: missing data path (--data)");
  const Dataset data = read_dataset(cfg.data);

  ModelConfig mc;
  mc.feature_dim = data.feature_dim;
  mc.num_actions = data.num_actions;
  mc.latent_dim = cfg.latent_dim;
  mc.hidden_dim = cfg.latent_dim;
  mc.alpha = static_cast<float>(cfg.alpha);
  mc.horizon = cfg.horizons.front();
  mc.teacher_forcing = cfg.teacher_forcing;

  Rng root(cfg.seed);
  const std::uint64_t model_seed = root.next_u64();
  const std::uint64_t train_seed = root.next_u64();

  DdnModel<float> model(mc, model_seed);
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch;
  tc.lr = static_cast<float>(cfg.lr);
  tc.seed = train_seed;
  tc.ablation = ablation_from_name(cfg.ablation);
  const TrainResult result = train(model, data, tc);

  CheckpointMeta meta;
  meta.ablation = tc.ablation;
  meta.epochs = result.epochs_run;
  meta.final_lr = result.lr_history.empty() ? tc.lr : result.lr_history.back();
  meta.seed = cfg.seed;
  meta.train_loss = result.train_loss;
  meta.val_loss = result.val_loss;

  std::filesystem::create_directories(cfg.out_dir);
  const auto dir = std::filesystem::path(cfg.out_dir);
  save_checkpoint(model, meta, (dir / "model.ddn").string());

  std::string csv = detail::echo_comments(cfg);
  csv += "epoch,train_loss,val_loss,lr\n";
  for (int e = 0; e < result.epochs_run; ++e) {
    csv += std::to_string(e) + "," + detail::fmt(result.train_loss[static_cast<std::size_t>(e)]) +
           "," + detail::fmt(result.val_loss[static_cast<std::size_t>(e)]) + "," +
           detail::fmt(result.lr_history[static_cast<std::size_t>(e)]) + "\n";
  }
  detail::write_text((dir / "loss.csv").string(), csv);

  log << "train: " << result.epochs_run << " epochs, loss "
      << detail::fmt(result.train_loss.front()) << " -> " << detail::fmt(result.train_loss.back())
      << " (" << ablation_name(tc.ablation) << ") -> " << cfg.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// plan: produce plans for every test sequence under the selected policy.
// ---------------------------------------------------------------------------
inline void cmd_plan(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.checkpoint.empty()) throw ConfigError("plan: missing checkpoint path (--checkpoint)");
  if (cfg.data.empty()) throw ConfigError("plan: missing data path (--data)");
  const LoadedCheckpoint loaded = load_checkpoint(cfg.checkpoint);
  const DdnModel<float>& model = loaded.model;
  const Dataset data = read_dataset(cfg.data);
  if (data.feature_dim != model.feature_dim() || data.num_actions != model.num_actions()) {
    throw UsageError("plan: dataset does not match checkpoint dimensions");
  }

  RetrievalIndex index;
  if (cfg.policy == "rb") {
    if (cfg.train_data.empty()) throw ConfigError("plan: policy rb needs --train-data");
    index = RetrievalIndex::build(read_dataset(cfg.train_data), model);
  } else if (cfg.policy != "ddn" && cfg.policy != "greedy" && cfg.policy != "random" &&
             cfg.policy != "rnn") {
    throw ConfigError("plan: unknown policy '" + cfg.policy + "'");
  }

  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < data.seqs.size(); ++i) {
    const std::size_t h = data.seqs[i].horizon();
    if (std::find(cfg.horizons.begin(), cfg.horizons.end(), h) != cfg.horizons.end()) {
      selected.push_back(i);
    }
  }

  // Per-sequence seeds fixed up front so threading cannot change results.
  std::vector<std::uint64_t> seeds(selected.size());
  Rng seed_rng(cfg.seed);
  for (auto& s : seeds) s = seed_rng.next_u64();

  struct Row {
    std::size_t seq_id;
    std::size_t horizon;
    std::vector<std::int32_t> pred;
    double distance;
  };
  std::vector<Row> rows(selected.size());

  detail::parallel_for(cfg.threads, selected.size(), [&](std::size_t k) {
    const std::size_t i = selected[k];
    const Sequence& s = data.seqs[i];
    const std::size_t h = s.horizon();
    const Tensor<float> o_start = s.observation(0);
    const Tensor<float> o_goal = s.observation(s.length() - 1);

    Row row;
    row.seq_id = i;
    row.horizon = h;
    if (cfg.policy == "ddn") {
      PlannerConfig pc;
      pc.horizon = h;
      pc.max_iterations = cfg.beta;
      pc.beam_width = cfg.eta;
      pc.goal_eps = cfg.epsilon;
      pc.branching = cfg.k_b;
      pc.uniform_proposals = loaded.meta.ablation == Ablation::kNoConjugate;
      const PlanResult r = plan(model, o_start, o_goal, pc);
      row.pred = r.actions;
      row.distance = r.terminal_distance;
    } else if (cfg.policy == "greedy") {
      const PlanResult r = greedy_plan(model, o_start, o_goal, h);
      row.pred = r.actions;
      row.distance = r.terminal_distance;
    } else {
      if (cfg.policy == "random") {
        row.pred = random_plan(h, model.num_actions(), seeds[k]);
      } else if (cfg.policy == "rb") {
        row.pred = index.plan(o_start, o_goal, model, h);
      } else {
        row.pred = rnn_policy_plan(model, o_start, o_goal, h);
      }
      // Distance of the predicted plan rolled through the forward dynamics.
      Tensor<float> x = model.encode_state(o_start);
      for (const std::int32_t a : row.pred) x = model.forward_step(x, model.embed_action(a));
      row.distance = latent_sqdist(x, model.encode_state(o_goal));
    }
    rows[k] = std::move(row);
  });

  std::string csv = detail::echo_comments(cfg);
  csv += "seq_id,horizon,pred_actions,gt_actions,terminal_distance\n";
  for (const Row& r : rows) {
    csv += std::to_string(r.seq_id) + "," + std::to_string(r.horizon) + "," +
           detail::join_ids(r.pred) + "," + detail::join_ids(data.seqs[r.seq_id].actions) + "," +
           detail::fmt(r.distance) + "\n";
  }
  detail::write_text(detail::resolved_out(cfg, "plans.csv"), csv);
  log << "plan: " << rows.size() << " sequences (policy " << cfg.policy << ")\n";
}

// ---------------------------------------------------------------------------
// walkthrough: order every test sequence's observation pool.
// ---------------------------------------------------------------------------
inline void cmd_walkthrough(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.checkpoint.empty()) {
    throw ConfigError("walkthrough: missing checkpoint path (--checkpoint)");
  }
  if (cfg.data.empty()) throw ConfigError("walkthrough: missing data path (--data)");
  const LoadedCheckpoint loaded = load_checkpoint(cfg.checkpoint);
  const Dataset data = read_dataset(cfg.data);
  if (data.feature_dim != loaded.model.feature_dim()) {
    throw UsageError("walkthrough: dataset does not match checkpoint dimensions");
  }

  struct Row {
    std::vector<std::int32_t> order;
    double score;
  };
  std::vector<Row> rows(data.seqs.size());
  detail::parallel_for(cfg.threads, data.seqs.size(), [&](std::size_t i) {
    const Sequence& s = data.seqs[i];
    std::vector<Tensor<float>> clips;
    clips.reserve(s.length());
    for (std::size_t t = 0; t < s.length(); ++t) clips.push_back(s.observation(t));
    const ScoreMatrix m = score_matrix(clips, loaded.model);
    rows[i].order = best_permutation(m);
    rows[i].score = permutation_score(m, rows[i].order);
  });

  std::string csv = detail::echo_comments(cfg);
  csv += "seq_id,horizon,pred_order,score\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv += std::to_string(i) + "," + std::to_string(data.seqs[i].horizon()) + "," +
           detail::join_ids(rows[i].order) + "," + detail::fmt(rows[i].score) + "\n";
  }
  detail::write_text(detail::resolved_out(cfg, "orderings.csv"), csv);
  log << "walkthrough: " << rows.size() << " pools ordered\n";
}

// ---------------------------------------------------------------------------
// eval: turn a plans or orderings CSV into a metrics report.
// ---------------------------------------------------------------------------
namespace detail {

struct ParsedCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> comments;
};

inline ParsedCsv parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open: " + path);
  ParsedCsv out;
  std::string line;
  std::size_t offset = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::size_t line_at = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body = body.substr(1);
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        out.comments.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      }
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    if (!have_header) {
      out.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != out.header.size()) {
        throw FormatError(line_at, "csv row has " + std::to_string(fields.size()) +
                                       " fields, header has " + std::to_string(out.header.size()));
      }
      out.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw FormatError(0, "csv has no header row");
  return out;
}

}  // namespace detail

inline void cmd_eval(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.input.empty()) throw ConfigError("eval: missing input path (--input)");
  const detail::ParsedCsv csv = detail::parse_csv(cfg.input);

  const std::vector<std::string> plan_header = {"seq_id", "horizon", "pred_actions",
                                                "gt_actions", "terminal_distance"};
  const std::vector<std::string> order_header = {"seq_id", "horizon", "pred_order", "score"};

  EvalReport report;
  report.config_echo = cfg.echo();
  report.config_echo.emplace_back("input_kind",
                                  csv.header == plan_header ? "plans" : "orderings");

  if (csv.header == plan_header) {
    for (const std::size_t h : cfg.horizons) {
      double success = 0, accuracy = 0, iou = 0;
      std::size_t count = 0;
      for (const auto& row : csv.rows) {
        const auto horizon = static_cast<std::size_t>(std::stoul(row[1]));
        if (horizon != h) continue;
        const auto pred = detail::split_ids(row[2]);
        const auto gt = detail::split_ids(row[3]);
        success += success_rate(pred, gt);
        accuracy += step_accuracy(pred, gt);
        iou += mean_iou(pred, gt);
        ++count;
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      const double inv = count ? 1.0 / static_cast<double>(count) : nan;
      report.rows.push_back({h, "success_rate", count ? success * inv : nan, count, cfg.seed});
      report.rows.push_back({h, "accuracy", count ? accuracy * inv : nan, count, cfg.seed});
      report.rows.push_back({h, "miou", count ? iou * inv : nan, count, cfg.seed});
    }
  } else if (csv.header == order_header) {
    for (const std::size_t h : cfg.horizons) {
      double ham = 0, pacc = 0;
      std::size_t count = 0;
      for (const auto& row : csv.rows) {
        const auto horizon = static_cast<std::size_t>(std::stoul(row[1]));
        if (horizon != h) continue;
        const auto order = detail::split_ids(row[2]);
        ham += static_cast<double>(hamming_distance(order));
        pacc += pairwise_accuracy(order);
        ++count;
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      const double inv = count ? 1.0 / static_cast<double>(count) : nan;
      report.rows.push_back({h, "hamming", count ? ham * inv : nan, count, cfg.seed});
      report.rows.push_back({h, "pairwise_acc", count ? pacc * inv : nan, count, cfg.seed});
    }
  } else {
    throw FormatError(0, "eval: unrecognized csv header in " + cfg.input);
  }

  const std::string text = report.to_csv();
  detail::write_text(detail::resolved_out(cfg, "report.csv"), text);
  log << text;
}

// Documented exit-code contract: 0 success, 2 configuration error, 3 format
// error, 1 anything else.
template <typename Fn>
int guarded(Fn&& fn, std::ostream& err = std::cerr) {
  try {
    fn();
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// inspect: dump the header of any dataset or checkpoint file.
// ---------------------------------------------------------------------------
inline void cmd_inspect(const RunConfig& cfg, std::ostream& log = std::cout) {
  if (cfg.input.empty()) throw ConfigError("inspect: missing input path (--input)");
  BinaryReader r = BinaryReader::from_file(cfg.input);
  const std::string head = r.bytes(4, "magic");
  if (head == std::string(kDatasetMagic, 4)) {
    const std::uint32_t version = r.u32("version");
    const std::uint32_t d = r.u32("D");
    const std::uint32_t a = r.u32("A");
    const std::uint32_t count = r.u32("N");
    log << "dataset (DDS1) version=" << version << " D=" << d << " A=" << a << " N=" << count
        << "\n";
    std::vector<std::uint32_t> lens;
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t len = r.u32("sequence length");
      lens.push_back(len);
      r.bytes(static_cast<std::size_t>(len) * d * 4 + (len - 1) * 4, "sequence payload");
    }
    log << "lengths:";
    for (std::size_t i = 0; i < std::min<std::size_t>(lens.size(), 16); ++i) {
      log << " " << lens[i];
    }
    if (lens.size() > 16) log << " ...";
    log << "\n";
  } else if (head == std::string(kCheckpointMagic, 4)) {
    const std::uint32_t version = r.u32("version");
    const std::uint32_t header_len = r.u32("header length");
    const std::string header = r.bytes(header_len, "header");
    log << "checkpoint (DDN1) version=" << version << "\n" << header;
  } else {
    throw FormatError(0, "unknown magic in " + cfg.input);
  }
}

}  // namespace ddn::cli
