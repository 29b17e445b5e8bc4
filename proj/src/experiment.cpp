#include "fedsim/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fedsim {

namespace {

using nlohmann::json;

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

// Full-precision, locale-independent double formatting for CSV.
std::string format_double(double value) {
  char buffer[64];
  const auto result =
      std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

template <typename T>
T parse_number(const std::string& text, const std::string& context) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw ConfigError(context + ": invalid number '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& text, const std::string& context) {
  if (text == "1" || text == "true" || text == "yes") {
    return true;
  }
  if (text == "0" || text == "false" || text == "no") {
    return false;
  }
  throw ConfigError(context + ": invalid boolean '" + text + "'");
}

json weights_to_json(const WeightMap& weights) {
  json out = json::object();
  for (const auto& [id, value] : weights) {
    out[std::to_string(id)] = value;
  }
  return out;
}

json round_to_json(const RoundLog& log) {
  json out;
  out["round"] = log.round;
  out["selected_ids"] = log.selected_ids;
  out["policy"] = to_string(log.policy);
  out["mode"] = to_string(log.mode);
  out["weights"] = {{"u", weights_to_json(log.weights.similarity)},
                    {"v", weights_to_json(log.weights.sample)},
                    {"w", weights_to_json(log.weights.combined)}};
  out["score"] = log.performance_score;
  out["loss"] = log.loss;
  out["sim_time"] = log.duration;
  out["cum_time"] = log.cumulative_time;
  return out;
}

json config_to_json(const FederationConfig& config) {
  json out;
  out["collaborators"] = config.n_collaborators;
  out["rounds"] = config.rounds;
  out["fraction"] = config.fraction;
  out["learning_rate"] = config.learning_rate;
  out["epochs_per_round"] = config.epochs_per_round;
  out["epsilon"] = config.epsilon;
  out["policy"] = to_string(config.policy);
  out["aggregator"] = to_string(config.aggregator);
  out["agg_mode"] = to_string(config.aggregation_mode);
  out["seed"] = config.seed;
  out["dimension"] = config.dimension;
  out["samples_per_collaborator"] = config.samples_per_collaborator;
  out["heterogeneity"] = config.heterogeneity;
  out["noise_std"] = config.noise_std;
  out["validation_samples"] = config.validation_samples;
  out["communication_overhead"] = config.communication_overhead;
  out["identical_datasets"] = config.identical_datasets;
  out["threads"] = config.threads;
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

}  // namespace

std::string to_string(HarmonicMode mode) {
  return mode == HarmonicMode::kLiteralEq6 ? "literal-eq6" : "standard-harmonic";
}

SelectionPolicy parse_policy(const std::string& text) {
  if (text == "recommender") {
    return SelectionPolicy::kRecommender;
  }
  if (text == "sliding-window" || text == "sliding_window" || text == "window") {
    return SelectionPolicy::kSlidingWindow;
  }
  if (text == "random") {
    return SelectionPolicy::kRandom;
  }
  throw ConfigError("unknown policy '" + text +
                    "' (expected recommender, sliding-window or random)");
}

AggregatorKind parse_aggregator(const std::string& text) {
  if (text == "hsimagg") {
    return AggregatorKind::kHsimagg;
  }
  if (text == "fedavg") {
    return AggregatorKind::kFedAvg;
  }
  if (text == "simagg" || text == "simagg-arithmetic") {
    return AggregatorKind::kSimaggArithmetic;
  }
  throw ConfigError("unknown aggregator '" + text +
                    "' (expected hsimagg, fedavg or simagg)");
}

HarmonicMode parse_harmonic_mode(const std::string& text) {
  if (text == "standard" || text == "standard-harmonic") {
    return HarmonicMode::kStandardHarmonic;
  }
  if (text == "literal" || text == "literal-eq6") {
    return HarmonicMode::kLiteralEq6;
  }
  throw ConfigError("unknown aggregation mode '" + text +
                    "' (expected standard or literal)");
}

std::vector<std::pair<SelectionPolicy, AggregatorKind>> parse_sweep_pairs(
    const std::string& text) {
  std::vector<std::pair<SelectionPolicy, AggregatorKind>> pairs;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    token = trim(token);
    if (token.empty()) {
      continue;
    }
    const auto plus = token.find('+');
    if (plus == std::string::npos) {
      throw ConfigError("sweep pair '" + token +
                        "' must look like policy+aggregator");
    }
    pairs.emplace_back(parse_policy(trim(token.substr(0, plus))),
                       parse_aggregator(trim(token.substr(plus + 1))));
  }
  if (pairs.empty()) {
    throw ConfigError("no sweep pairs given");
  }
  return pairs;
}

std::string pair_label(SelectionPolicy policy, AggregatorKind aggregator) {
  return to_string(policy) + "-" + to_string(aggregator);
}

void apply_key_value(ExperimentSpec& spec, const std::string& key,
                     const std::string& value, const std::string& context) {
  FederationConfig& config = spec.config;
  try {
    if (key == "seed") {
      config.seed = parse_number<std::uint64_t>(value, context);
    } else if (key == "rounds") {
      config.rounds = parse_number<int>(value, context);
    } else if (key == "collaborators") {
      config.n_collaborators = parse_number<int>(value, context);
    } else if (key == "fraction") {
      config.fraction = parse_number<double>(value, context);
    } else if (key == "policy") {
      config.policy = parse_policy(value);
    } else if (key == "aggregator") {
      config.aggregator = parse_aggregator(value);
    } else if (key == "agg_mode") {
      config.aggregation_mode = parse_harmonic_mode(value);
    } else if (key == "epsilon") {
      config.epsilon = parse_number<double>(value, context);
    } else if (key == "heterogeneity") {
      config.heterogeneity = parse_number<double>(value, context);
    } else if (key == "learning_rate") {
      config.learning_rate = parse_number<double>(value, context);
    } else if (key == "epochs_per_round") {
      config.epochs_per_round = parse_number<int>(value, context);
    } else if (key == "dimension") {
      config.dimension = parse_number<int>(value, context);
    } else if (key == "samples_per_collaborator") {
      config.samples_per_collaborator = parse_number<int>(value, context);
    } else if (key == "noise_std") {
      config.noise_std = parse_number<double>(value, context);
    } else if (key == "validation_samples") {
      config.validation_samples = parse_number<int>(value, context);
    } else if (key == "communication_overhead") {
      config.communication_overhead = parse_number<double>(value, context);
    } else if (key == "identical_datasets") {
      config.identical_datasets = parse_bool(value, context);
    } else if (key == "threads") {
      config.threads = parse_number<int>(value, context);
    } else if (key == "outdir") {
      spec.outdir = value;
    } else if (key == "label") {
      spec.label = value;
    } else if (key == "sweep_pairs") {
      spec.sweep_pairs = parse_sweep_pairs(value);
    } else {
      throw ConfigError(context + ": unknown key '" + key + "'");
    }
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(context, 0) == 0) {
      throw;
    }
    throw ConfigError(context + ": " + what);
  }
}

ExperimentSpec load_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  ExperimentSpec spec;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto comment = line.find('#');
    if (comment != std::string::npos) {
      line = line.substr(0, comment);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const std::string context =
        path.filename().string() + ":" + std::to_string(line_number);
    const auto equals = line.find('=');
    if (equals == std::string::npos) {
      throw ConfigError(context + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, equals));
    const std::string value = trim(line.substr(equals + 1));
    if (key.empty()) {
      throw ConfigError(context + ": empty key");
    }
    apply_key_value(spec, key, value, context);
  }
  return spec;
}

RunOutput run_experiment(const ExperimentSpec& spec) {
  try {
    validate_config(spec.config);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (spec.label.empty()) {
    throw ConfigError("label must not be empty");
  }

  const std::filesystem::path dir = spec.outdir / spec.label;
  std::filesystem::create_directories(dir);

  Federation federation = make_federation(spec.config);
  const std::vector<RoundLog> logs = run_federation(federation);

  RunOutput output;
  output.label = spec.label;
  output.rounds = static_cast<int>(logs.size());
  output.final_score = logs.back().performance_score;
  output.final_loss = logs.back().loss;
  output.cumulative_time = logs.back().cumulative_time;

  std::string rounds_text;
  for (const RoundLog& log : logs) {
    rounds_text += round_to_json(log).dump();
    rounds_text += '\n';
  }
  output.rounds_path = dir / "rounds.jsonl";
  write_text_file(output.rounds_path, rounds_text);

  json summary;
  summary["label"] = spec.label;
  summary["rounds"] = output.rounds;
  summary["final_score"] = output.final_score;
  summary["final_loss"] = output.final_loss;
  summary["cum_sim_time"] = output.cumulative_time;
  summary["config"] = config_to_json(spec.config);
  output.summary_path = dir / "summary.json";
  write_text_file(output.summary_path, summary.dump(2) + "\n");

  std::ostringstream store_text;
  federation.store.export_jsonl(store_text);
  output.store_path = dir / "store.jsonl";
  write_text_file(output.store_path, store_text.str());

  return output;
}

SweepOutput run_sweep(const ExperimentSpec& spec) {
  if (spec.sweep_pairs.empty()) {
    throw ConfigError("sweep requires at least one policy+aggregator pair");
  }
  {
    std::set<std::string> labels;
    for (const auto& [policy, aggregator] : spec.sweep_pairs) {
      if (!labels.insert(pair_label(policy, aggregator)).second) {
        throw ConfigError("duplicate sweep pair " +
                          pair_label(policy, aggregator));
      }
    }
  }

  SweepOutput output;
  for (const auto& [policy, aggregator] : spec.sweep_pairs) {
    ExperimentSpec pair_spec = spec;
    pair_spec.config.policy = policy;
    pair_spec.config.aggregator = aggregator;
    pair_spec.label = pair_label(policy, aggregator);
    pair_spec.sweep_pairs.clear();
    try {
      output.runs.push_back(run_experiment(pair_spec));
    } catch (const std::exception& e) {
      output.failures.emplace_back(pair_spec.label, e.what());
    }
  }

  std::string csv = "label,policy,aggregator,final_score,final_loss,cum_sim_time\n";
  for (std::size_t i = 0, run = 0; i < spec.sweep_pairs.size(); ++i) {
    const auto& [policy, aggregator] = spec.sweep_pairs[i];
    const std::string label = pair_label(policy, aggregator);
    if (run < output.runs.size() && output.runs[run].label == label) {
      const RunOutput& r = output.runs[run++];
      csv += label + "," + to_string(policy) + "," + to_string(aggregator) +
             "," + format_double(r.final_score) + "," +
             format_double(r.final_loss) + "," +
             format_double(r.cumulative_time) + "\n";
    }
  }
  std::filesystem::create_directories(spec.outdir);
  output.comparison_path = spec.outdir / "comparison.csv";
  write_text_file(output.comparison_path, csv);
  return output;
}

}  // namespace fedsim
