#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ete/error.hpp"

namespace ete {

// Conventions used throughout the library:
//  * repetition indices are 0-based (r = 0 .. R-1);
//  * time indices ("samples") are 1-based (t = 1 .. N), matching the usual
//    t = 1..N notation for trial-aligned recordings. A Window is an inclusive
//    range of such samples.
using Sample = std::int64_t;

// Scalar channel observed over R repetitions of N samples each, stored
// repetition-major. Immutable once constructed apart from whole-value
// assignment.
class EnsembleSeries {
 public:
  EnsembleSeries() = default;

  EnsembleSeries(std::string name, std::size_t n_repetitions, std::size_t n_samples,
                 std::vector<double> values, double sample_rate = 1000.0)
      : name_(std::move(name)),
        n_repetitions_(n_repetitions),
        n_samples_(n_samples),
        sample_rate_(sample_rate),
        values_(std::move(values)) {}

  // Builds from one vector per repetition; ragged input is rejected.
  static EnsembleSeries from_rows(std::string name, const std::vector<std::vector<double>>& rows,
                                  double sample_rate = 1000.0) {
    if (rows.empty()) throw Error(ErrorCode::EmptyEnsemble, "no repetitions");
    const std::size_t n = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * n);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != n) {
        throw Error(ErrorCode::RaggedRepetitions, "repetition " + std::to_string(r) + " has " +
                                                      std::to_string(rows[r].size()) +
                                                      " samples, expected " + std::to_string(n));
      }
      flat.insert(flat.end(), rows[r].begin(), rows[r].end());
    }
    return EnsembleSeries(std::move(name), rows.size(), n, std::move(flat), sample_rate);
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t n_repetitions() const noexcept { return n_repetitions_; }
  std::size_t n_samples() const noexcept { return n_samples_; }
  double sample_rate() const noexcept { return sample_rate_; }
  std::span<const double> values() const noexcept { return values_; }

  // Matrix access, both indices 0-based (column = sample - 1).
  double value(std::size_t r, std::size_t col) const noexcept { return values_[r * n_samples_ + col]; }

  // Value at repetition r (0-based) and sample t (1-based).
  double at(std::size_t r, Sample t) const noexcept {
    return values_[r * n_samples_ + static_cast<std::size_t>(t - 1)];
  }

  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(values_).subspan(r * n_samples_, n_samples_);
  }

  void set_name(std::string name) { name_ = std::move(name); }

  friend bool operator==(const EnsembleSeries&, const EnsembleSeries&) = default;

 private:
  std::string name_;
  std::size_t n_repetitions_ = 0;
  std::size_t n_samples_ = 0;
  double sample_rate_ = 1000.0;
  std::vector<double> values_;
};

struct ValidationIssue {
  ErrorCode code;
  std::size_t repetition = 0;  // 0-based
  std::size_t column = 0;      // 0-based
  std::string message;

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

// Returns nullopt when the series satisfies every invariant, otherwise the
// first violation found in row-major scan order.
inline std::optional<ValidationIssue> validate_ensemble(const EnsembleSeries& series) {
  if (series.n_repetitions() == 0 || series.n_samples() == 0) {
    return ValidationIssue{ErrorCode::EmptyEnsemble, 0, 0,
                           "ensemble has " + std::to_string(series.n_repetitions()) +
                               " repetitions of " + std::to_string(series.n_samples()) + " samples"};
  }
  if (series.values().size() != series.n_repetitions() * series.n_samples()) {
    return ValidationIssue{ErrorCode::RaggedRepetitions, 0, 0,
                           "value count " + std::to_string(series.values().size()) +
                               " does not match R*N"};
  }
  if (!(series.sample_rate() > 0.0) || !std::isfinite(series.sample_rate())) {
    return ValidationIssue{ErrorCode::NonFiniteValue, 0, 0, "sample rate must be positive"};
  }
  for (std::size_t r = 0; r < series.n_repetitions(); ++r) {
    for (std::size_t c = 0; c < series.n_samples(); ++c) {
      if (!std::isfinite(series.value(r, c))) {
        return ValidationIssue{ErrorCode::NonFiniteValue, r, c,
                               "non-finite value at repetition " + std::to_string(r) + ", sample " +
                                   std::to_string(c + 1)};
      }
    }
  }
  return std::nullopt;
}

inline void require_valid(const EnsembleSeries& series) {
  if (auto issue = validate_ensemble(series)) {
    throw Error(issue->code, series.name() + ": " + issue->message);
  }
}

struct EmbeddingSpec {
  std::size_t dim = 1;
  std::size_t delay = 1;

  // Number of consecutive samples covered by one embedding vector.
  std::size_t span() const noexcept { return (dim - 1) * delay + 1; }

  friend bool operator==(const EmbeddingSpec&, const EmbeddingSpec&) = default;
};

inline void check_embedding_spec(const EmbeddingSpec& spec, std::size_t n_samples) {
  if (spec.dim < 1 || spec.delay < 1) {
    throw Error(ErrorCode::InvalidArgument, "embedding dim and delay must be >= 1");
  }
  if (spec.span() > n_samples) {
    throw Error(ErrorCode::IndexUnderflow, "embedding span " + std::to_string(spec.span()) +
                                               " exceeds series length " + std::to_string(n_samples));
  }
}

struct Window {
  Sample first = 1;  // inclusive, 1-based
  Sample last = 1;   // inclusive

  std::size_t length() const noexcept { return static_cast<std::size_t>(last - first + 1); }

  friend bool operator==(const Window&, const Window&) = default;
};

enum class Correction { none, bonferroni, fdr };

enum class PValueMode {
  proportion,  // count(surrogate >= original) / S
  plus_one,    // (count + 1) / (S + 1)
};

struct AnalysisConfig {
  std::size_t k = 4;
  std::vector<std::size_t> u_candidates{1};
  Window window{1, 1};
  std::size_t n_surrogates = 500;
  double alpha = 0.05;
  Correction correction = Correction::bonferroni;
  std::uint64_t seed = 0;
  double jitter_amplitude = 1e-8;
  bool strict_permutation = true;
  PValueMode pvalue_mode = PValueMode::proportion;
};

inline void check_config(const AnalysisConfig& config) {
  if (config.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (config.u_candidates.empty()) throw Error(ErrorCode::InvalidArgument, "u_candidates is empty");
  for (std::size_t i = 0; i < config.u_candidates.size(); ++i) {
    if (config.u_candidates[i] < 1) throw Error(ErrorCode::InvalidArgument, "u must be >= 1");
    if (i > 0 && config.u_candidates[i] <= config.u_candidates[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "u_candidates must be strictly ascending");
    }
  }
  if (config.window.first > config.window.last) {
    throw Error(ErrorCode::InvalidArgument, "window start must not exceed window end");
  }
  if (config.n_surrogates < 1) throw Error(ErrorCode::InvalidArgument, "n_surrogates must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  }
  if (!(config.jitter_amplitude >= 0.0) || !std::isfinite(config.jitter_amplitude)) {
    throw Error(ErrorCode::InvalidArgument, "jitter amplitude must be finite and >= 0");
  }
}

// Outcome of testing one directed channel pair in one window. TE values are
// in nats.
struct TEResult {
  std::string source;
  std::string target;
  Window window;
  std::size_t u_selected = 0;
  double te_value = 0.0;
  std::vector<double> surrogate_values;
  double p_value = 1.0;
  bool significant = false;
  bool significant_corrected = false;
  double te_minus_median_surrogate = 0.0;
  std::vector<std::pair<std::size_t, double>> te_curve;
  EmbeddingSpec source_embedding;
  EmbeddingSpec target_embedding;

  friend bool operator==(const TEResult&, const TEResult&) = default;
};

}  // namespace ete
