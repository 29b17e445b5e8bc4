#include "fedsim/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

// Stream tags for seed derivation.
constexpr std::uint64_t kSelectionStream = 0x73656c6563ULL;
constexpr std::uint64_t kNnmfInitStream = 0x6e6e6d66ULL;

std::vector<CollaboratorId> sample_without_replacement(int n, int count,
                                                       RandomStream& stream) {
  std::vector<CollaboratorId> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < count; ++i) {
    const auto offset = static_cast<std::size_t>(
        stream.next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(ids[static_cast<std::size_t>(i)],
              ids[static_cast<std::size_t>(i) + offset]);
  }
  ids.resize(static_cast<std::size_t>(count));
  std::sort(ids.begin(), ids.end());
  return ids;
}

void check_round(int round) {
  if (round < 1) {
    throw std::invalid_argument("round must be at least 1");
  }
}

}  // namespace

std::string to_string(SelectionPolicy policy) {
  switch (policy) {
    case SelectionPolicy::kRecommender:
      return "recommender";
    case SelectionPolicy::kSlidingWindow:
      return "sliding-window";
    case SelectionPolicy::kRandom:
      return "random";
  }
  return "unknown";
}

std::string to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::kExploitTop:
      return "exploit-top";
    case SelectionMode::kExploreBottom:
      return "explore-bottom";
    case SelectionMode::kFallbackRandom:
      return "fallback-random";
    case SelectionMode::kWindow:
      return "window";
    case SelectionMode::kRandom:
      return "random";
  }
  return "unknown";
}

void MetricsStore::record_round(int round, const SelectionDecision& decision,
                                const std::map<CollaboratorId, RoundMetrics>& metrics,
                                const std::map<CollaboratorId, double>& durations) {
  check_round(round);
  if (round <= last_round_) {
    throw std::invalid_argument("rounds must be recorded in increasing order");
  }
  for (CollaboratorId id : decision.selected_ids) {
    if (!metrics.contains(id) || !durations.contains(id)) {
      throw std::invalid_argument(
          "selected collaborator is missing metrics or duration");
    }
  }
  for (const auto& [id, m] : metrics) {
    StoredRecord record;
    record.round = round;
    record.id = id;
    record.performance_score = m.performance_score;
    record.loss = m.loss;
    record.selected = std::binary_search(decision.selected_ids.begin(),
                                         decision.selected_ids.end(), id);
    auto it = durations.find(id);
    record.duration = it != durations.end() ? it->second : 0.0;
    records_.push_back(record);
    apply(record);
  }
  last_round_ = round;
}

void MetricsStore::apply(const StoredRecord& record) {
  State& state = state_[record.id];
  state.performance_score = record.performance_score;
  state.loss = record.loss;
  if (record.selected) {
    state.frequency += 1;
    state.time += record.duration;
  }
}

std::vector<CollaboratorRecord> MetricsStore::build_records(
    int n_collaborators) const {
  if (n_collaborators < 1) {
    throw std::invalid_argument("n must be positive");
  }
  if (state_.empty()) {
    throw std::invalid_argument("no observed collaborators");
  }
  // Column means of the observed values impute the performance axes of
  // never-selected collaborators; frequency 0 still marks them as
  // exploration targets.
  double mean_performance = 0.0;
  double mean_loss = 0.0;
  std::size_t observed = 0;
  for (const auto& [id, state] : state_) {
    if (id < 0 || id >= n_collaborators) {
      continue;
    }
    mean_performance += state.performance_score;
    mean_loss += state.loss;
    ++observed;
  }
  if (observed > 0) {
    mean_performance /= static_cast<double>(observed);
    mean_loss /= static_cast<double>(observed);
  }

  std::vector<CollaboratorRecord> records;
  records.reserve(static_cast<std::size_t>(n_collaborators));
  for (CollaboratorId id = 0; id < n_collaborators; ++id) {
    CollaboratorRecord record;
    record.id = id;
    auto it = state_.find(id);
    if (it != state_.end()) {
      record.performance_score = it->second.performance_score;
      record.loss = it->second.loss;
      record.selection_frequency = it->second.frequency;
      record.total_contribution_time = it->second.time;
    } else {
      record.performance_score = mean_performance;
      record.loss = mean_loss;
      record.selection_frequency = 0;
      record.total_contribution_time = 0.0;
    }
    records.push_back(record);
  }
  return records;
}

void MetricsStore::export_jsonl(std::ostream& out) const {
  for (const StoredRecord& record : records_) {
    nlohmann::json line;
    line["round"] = record.round;
    line["id"] = record.id;
    line["performance_score"] = record.performance_score;
    line["loss"] = record.loss;
    line["selected"] = record.selected ? 1 : 0;
    line["duration"] = record.duration;
    out << line.dump() << '\n';
  }
}

MetricsStore MetricsStore::import_jsonl(std::istream& in) {
  MetricsStore store;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) {
      continue;
    }
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(line);
      StoredRecord record;
      record.round = parsed.at("round").get<int>();
      record.id = parsed.at("id").get<CollaboratorId>();
      record.performance_score = parsed.at("performance_score").get<double>();
      record.loss = parsed.at("loss").get<double>();
      const auto& selected = parsed.at("selected");
      record.selected =
          selected.is_boolean() ? selected.get<bool>() : selected.get<int>() != 0;
      record.duration = parsed.at("duration").get<double>();
      store.records_.push_back(record);
      store.apply(record);
      store.last_round_ = std::max(store.last_round_, record.round);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("store line " + std::to_string(line_number) +
                               ": " + e.what());
    }
  }
  return store;
}

int selection_count(int n_collaborators, double fraction) {
  if (n_collaborators < 1) {
    throw std::invalid_argument("n must be positive");
  }
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("fraction out of range");
  }
  // The 1e-9 slack keeps fractions like 0.1 * 30 from ceiling to 4.
  int count = static_cast<int>(
      std::ceil(fraction * static_cast<double>(n_collaborators) - 1e-9));
  count = std::max(count, 1);
  return std::min(count, n_collaborators);
}

Matrix normalize_metrics(std::span<const CollaboratorRecord> records) {
  if (records.empty()) {
    throw std::invalid_argument("no collaborators");
  }
  const std::size_t n = records.size();
  Matrix raw(n, kMetricColumns);
  for (std::size_t i = 0; i < n; ++i) {
    raw.at(i, kPerformanceColumn) = records[i].performance_score;
    raw.at(i, kLossColumn) = records[i].loss;
    raw.at(i, kFrequencyColumn) =
        static_cast<double>(records[i].selection_frequency);
    raw.at(i, kTimeColumn) = records[i].total_contribution_time;
  }

  Matrix normalized(n, kMetricColumns);
  for (std::size_t j = 0; j < kMetricColumns; ++j) {
    double lo = raw.at(0, j);
    double hi = raw.at(0, j);
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, raw.at(i, j));
      hi = std::max(hi, raw.at(i, j));
    }
    for (std::size_t i = 0; i < n; ++i) {
      normalized.at(i, j) = hi > lo ? (raw.at(i, j) - lo) / (hi - lo) : 0.5;
    }
  }
  // Invert loss so every column reads "larger is better".
  for (std::size_t i = 0; i < n; ++i) {
    normalized.at(i, kLossColumn) = 1.0 - normalized.at(i, kLossColumn);
  }
  return normalized;
}

SelectionDecision select_recommender(const MetricsStore& history, int round,
                                     int n_collaborators, double fraction,
                                     std::uint64_t seed) {
  check_round(round);
  const int count = selection_count(n_collaborators, fraction);

  auto fallback = [&]() {
    SelectionDecision decision = select_random(n_collaborators, count, round, seed);
    decision.policy = SelectionPolicy::kRecommender;
    decision.mode = SelectionMode::kFallbackRandom;
    return decision;
  };

  if (history.observed_count() < 2) {
    return fallback();
  }

  std::optional<FactorizationResult> factorization;
  try {
    const std::vector<CollaboratorRecord> records =
        history.build_records(n_collaborators);
    const Matrix metrics = normalize_metrics(records);
    factorization =
        factorize(metrics, 2, 500, 1e-6,
                  derive_seed(seed, kNnmfInitStream,
                              static_cast<std::uint64_t>(round)));
  } catch (const std::exception&) {
    return fallback();
  }

  // build_records returns ids 0..n-1 in order, so ranking indices are ids.
  const std::vector<std::size_t> ranking = rank_by_first_factor(*factorization);

  SelectionDecision decision;
  decision.round = round;
  decision.policy = SelectionPolicy::kRecommender;
  const bool exploit = round % 2 == 0;
  decision.mode =
      exploit ? SelectionMode::kExploitTop : SelectionMode::kExploreBottom;
  decision.selected_ids.reserve(static_cast<std::size_t>(count));
  if (exploit) {
    for (int i = 0; i < count; ++i) {
      decision.selected_ids.push_back(
          static_cast<CollaboratorId>(ranking[static_cast<std::size_t>(i)]));
    }
  } else {
    for (int i = 0; i < count; ++i) {
      decision.selected_ids.push_back(static_cast<CollaboratorId>(
          ranking[ranking.size() - static_cast<std::size_t>(count - i)]));
    }
  }
  std::sort(decision.selected_ids.begin(), decision.selected_ids.end());
  decision.factorization = std::move(factorization);
  return decision;
}

SelectionDecision select_sliding_window(std::span<const CollaboratorId> permutation,
                                        int round, int count) {
  check_round(round);
  const auto n = static_cast<std::int64_t>(permutation.size());
  if (n < 1) {
    throw std::invalid_argument("empty permutation");
  }
  if (count < 1 || count > n) {
    throw std::invalid_argument("count out of range");
  }
  const std::int64_t start =
      (static_cast<std::int64_t>(round - 1) * count) % n;

  SelectionDecision decision;
  decision.round = round;
  decision.policy = SelectionPolicy::kSlidingWindow;
  decision.mode = SelectionMode::kWindow;
  decision.selected_ids.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    decision.selected_ids.push_back(
        permutation[static_cast<std::size_t>((start + i) % n)]);
  }
  std::sort(decision.selected_ids.begin(), decision.selected_ids.end());
  return decision;
}

SelectionDecision select_random(int n_collaborators, int count, int round,
                                std::uint64_t seed) {
  check_round(round);
  if (n_collaborators < 1) {
    throw std::invalid_argument("n must be positive");
  }
  if (count < 1 || count > n_collaborators) {
    throw std::invalid_argument("count out of range");
  }
  RandomStream stream(
      derive_seed(seed, kSelectionStream, static_cast<std::uint64_t>(round)));

  SelectionDecision decision;
  decision.round = round;
  decision.policy = SelectionPolicy::kRandom;
  decision.mode = SelectionMode::kRandom;
  decision.selected_ids =
      sample_without_replacement(n_collaborators, count, stream);
  return decision;
}

}  // namespace fedsim
