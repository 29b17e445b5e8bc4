#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/nnmf.hpp"
#include "fedsim/params.hpp"

namespace fedsim {

// Column layout of the collaborator-metrics matrix.
inline constexpr std::size_t kMetricColumns = 4;
inline constexpr std::size_t kPerformanceColumn = 0;
inline constexpr std::size_t kLossColumn = 1;
inline constexpr std::size_t kFrequencyColumn = 2;
inline constexpr std::size_t kTimeColumn = 3;

// One collaborator's cumulative history row. Frequency and contribution
// time only ever grow across rounds.
struct CollaboratorRecord {
  CollaboratorId id = 0;
  double performance_score = 0.0;  // in [0, 1], higher is better
  double loss = 0.0;               // nonnegative, lower is better
  std::int64_t selection_frequency = 0;
  double total_contribution_time = 0.0;  // simulated seconds
};

enum class SelectionPolicy { kRecommender, kSlidingWindow, kRandom };

enum class SelectionMode {
  kExploitTop,      // even rounds: top of the latent-factor ranking
  kExploreBottom,   // odd rounds: bottom of the ranking
  kFallbackRandom,  // cold start or factorization failure
  kWindow,          // sliding-window baseline
  kRandom,          // pure random baseline
};

std::string to_string(SelectionPolicy policy);
std::string to_string(SelectionMode mode);

struct SelectionDecision {
  int round = 0;
  std::vector<CollaboratorId> selected_ids;  // distinct, ascending
  SelectionPolicy policy = SelectionPolicy::kRandom;
  SelectionMode mode = SelectionMode::kFallbackRandom;
  // Present when the recommender policy actually ran a factorization.
  std::optional<FactorizationResult> factorization;
};

// Validation metrics observed for one collaborator in one round.
struct RoundMetrics {
  double performance_score = 0.0;
  double loss = 0.0;
};

// One line of the store's JSONL export.
struct StoredRecord {
  int round = 0;
  CollaboratorId id = 0;
  double performance_score = 0.0;
  double loss = 0.0;
  bool selected = false;
  double duration = 0.0;

  friend bool operator==(const StoredRecord&, const StoredRecord&) = default;
};

// Append-only history of per-round collaborator metrics. Single writer
// (the orchestrator between rounds); reads take a snapshot of value
// types, so concurrent reads are safe.
class MetricsStore {
 public:
  // Appends one record per entry of `metrics` and bumps the selection
  // counters of every id in `decision`. Every selected id must come with
  // metrics and a duration.
  void record_round(int round, const SelectionDecision& decision,
                    const std::map<CollaboratorId, RoundMetrics>& metrics,
                    const std::map<CollaboratorId, double>& durations);

  std::size_t observed_count() const { return state_.size(); }
  const std::vector<StoredRecord>& records() const { return records_; }
  int last_round() const { return last_round_; }

  // Rows for ids [0, n): observed collaborators carry their latest
  // metrics plus cumulative counters; never-observed ones get the column
  // mean of the observed values with zero frequency and time.
  std::vector<CollaboratorRecord> build_records(int n_collaborators) const;

  void export_jsonl(std::ostream& out) const;
  static MetricsStore import_jsonl(std::istream& in);

 private:
  struct State {
    double performance_score = 0.0;
    double loss = 0.0;
    std::int64_t frequency = 0;
    double time = 0.0;
  };

  void apply(const StoredRecord& record);

  std::vector<StoredRecord> records_;
  std::map<CollaboratorId, State> state_;
  int last_round_ = 0;
};

// ceil(fraction * n), clamped to [1, n].
int selection_count(int n_collaborators, double fraction);

// Per-column min-max normalization to [0, 1]; a constant column maps to
// all 0.5. The loss column is then inverted (1 - x) so that larger is
// uniformly better across all four columns.
Matrix normalize_metrics(std::span<const CollaboratorRecord> records);

// NNMF-driven selection: normalize the history, factorize with k = 2,
// rank by the first latent factor, then exploit the top `count` rows on
// even rounds and explore the bottom `count` on odd rounds. Falls back
// to a seeded random sample while fewer than two collaborators have any
// history (or if the factorization fails).
SelectionDecision select_recommender(const MetricsStore& history, int round,
                                     int n_collaborators, double fraction,
                                     std::uint64_t seed);

// Baseline: window of `count` entries over a fixed permutation,
// advancing by `count` per round with wraparound.
SelectionDecision select_sliding_window(std::span<const CollaboratorId> permutation,
                                        int round, int count);

// Baseline: uniform sample without replacement, deterministic per
// (seed, round).
SelectionDecision select_random(int n_collaborators, int count, int round,
                                std::uint64_t seed);

}  // namespace fedsim
