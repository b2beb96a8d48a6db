#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "renstab/entropy.hpp"
#include "renstab/parallel.hpp"
#include "renstab/stability.hpp"

namespace renstab {

// One batch of the preparation test: Alice prepares states whose product
// infidelity delta is drawn from a configured range, sends them through
// D_lambda^{(x)n}, and Bob classifies the output entropy against the
// accept/reject thresholds for his announced eps.
struct TrialConfig {
  DepolarizingParams params{0.5, 2, 2};
  double p = 2.0;
  double eps = 1e-3;
  bool honest = true;
  double delta_max = 1e-2;  // cheating default draws from (eps, delta_max]
  std::optional<double> delta_lo;  // explicit sampler range, overrides honest/cheating defaults
  std::optional<double> delta_hi;
  bool allow_weight_one = false;  // weight-1 directions are outside the theory
  int trials = 200;
  std::uint64_t seed = 1;
  double noise_sigma = 0.0;  // additive Gaussian noise on Bob's entropy estimate
  int fidelity_restarts = 8;
  bool parallel = true;

  std::pair<double, double> delta_range() const {
    const double lo = delta_lo.value_or(honest ? 0.0 : eps);
    const double hi = delta_hi.value_or(honest ? eps : delta_max);
    return {lo, hi};
  }

  void validate() const {
    if (!(eps > 0.0)) throw std::domain_error("TrialConfig: eps must be > 0");
    if (!(delta_max < 1.0)) throw std::domain_error("TrialConfig: delta_max must be < 1");
    if (params.n > 4 || params.d > 3)
      throw std::domain_error("TrialConfig: desk scale requires n <= 4 and d <= 3");
    if (trials < 1) throw std::invalid_argument("TrialConfig: trials must be >= 1");
    if (noise_sigma < 0.0) throw std::domain_error("TrialConfig: noise sigma must be >= 0");
    const auto [lo, hi] = delta_range();
    if (!(lo >= 0.0 && hi < 1.0 && lo <= hi))
      throw std::domain_error("TrialConfig: delta range must satisfy 0 <= lo <= hi < 1");
    const int min_weight = allow_weight_one ? 1 : 2;
    if (min_weight > params.n)
      throw std::domain_error(
          "TrialConfig: no directions of the required Hamming weight exist at this n");
  }
};

struct TrialRecord {
  int index = 0;
  double delta = 0.0;           // true preparation infidelity
  double fidelity_bound = 0.0;  // best product overlap found for the prepared state
  double s_value = 0.0;
  double s_min = 0.0;
  Verdict verdict = Verdict::undecided;
  double margin_accept = 0.0;  // s_value - accept threshold
  double margin_reject = 0.0;  // s_value - reject threshold; NaN when none exists
};

struct ProtocolSummary {
  int accepts = 0;
  int undecided = 0;
  int rejects = 0;
  int false_accepts = 0;  // accepted although delta > eps
  int false_rejects = 0;  // rejected although delta <= eps
};

struct ProtocolResult {
  std::vector<TrialRecord> records;
  ProtocolSummary summary;
  StabilityThresholds thresholds;
  double s_min = 0.0;
};

namespace detail {

// Unit vector supported on basis states of Hamming weight >= min_weight.
inline PureState sample_perpendicular(const DepolarizingParams& params, int min_weight,
                                      Rng& rng) {
  const long dim = params.dim();
  std::vector<long> support;
  for (long x = 0; x < dim; ++x)
    if (hamming_weight(x, params.d, params.n) >= min_weight) support.push_back(x);
  StateVector amps = StateVector::Zero(dim);
  for (long x : support) amps[x] = rng.complex_gaussian();
  amps /= amps.norm();
  return PureState(params.d, params.n, std::move(amps));
}

}  // namespace detail

// Trial i draws from substream(seed, i), so results are independent of
// execution order and byte-identical between serial and parallel runs.
inline ProtocolResult run_protocol(const TrialConfig& config) {
  config.validate();
  const StabilityThresholds thresholds =
      StabilityThresholds::compute(config.params, config.p);
  const RenyiOrder order(config.p);
  const double s_min = min_output_renyi_closed(config.params, order);
  const auto [delta_lo, delta_hi] = config.delta_range();
  const int min_weight = config.allow_weight_one ? 1 : 2;

  ProtocolResult result{std::vector<TrialRecord>(config.trials), ProtocolSummary{}, thresholds,
                        s_min};

  parallel_for_index(
      config.trials,
      [&](long i) {
        Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(i));
        TrialRecord record;
        record.index = static_cast<int>(i);
        record.delta = rng.uniform(delta_lo, delta_hi);
        const PureState direction =
            detail::sample_perpendicular(config.params, min_weight, rng);
        const PureState psi = perturbed_product(record.delta, direction);
        const DensityMatrix out = apply_depolarizing(config.params, DensityMatrix::pure(psi));
        record.s_value = renyi_entropy(out, order);
        if (config.noise_sigma > 0.0) record.s_value += config.noise_sigma * rng.gaussian();
        record.fidelity_bound =
            max_product_fidelity(psi, config.fidelity_restarts, rng.next_u64()).value;
        record.s_min = s_min;
        record.verdict = classify(record.s_value, config.eps, thresholds, s_min);
        record.margin_accept =
            record.s_value - (s_min + config.eps * thresholds.accept_coefficient);
        record.margin_reject =
            thresholds.reject_coefficient
                ? record.s_value - (s_min + config.eps * *thresholds.reject_coefficient)
                : std::numeric_limits<double>::quiet_NaN();
        result.records[i] = record;
      },
      config.parallel ? 0 : 1);

  for (const TrialRecord& record : result.records) {
    switch (record.verdict) {
      case Verdict::accept:
        ++result.summary.accepts;
        if (record.delta > config.eps) ++result.summary.false_accepts;
        break;
      case Verdict::undecided:
        ++result.summary.undecided;
        break;
      case Verdict::reject:
        ++result.summary.rejects;
        if (record.delta <= config.eps) ++result.summary.false_rejects;
        break;
    }
  }
  return result;
}

struct GapRow {
  double p = 0.0;
  double accept_coefficient = 0.0;
  double reject_coefficient = 0.0;
  double gap_width = 0.0;
  double undecided_rate = 0.0;
};

// Threshold band per Renyi order, with the undecided rate of a sampler
// fixed at delta in (eps, 2.5 eps]. As the gap narrows with growing p,
// more of that fixed band falls on the reject side.
inline std::vector<GapRow> gap_width_report(const TrialConfig& base,
                                            std::vector<double> p_list) {
  if (p_list.empty()) throw std::invalid_argument("gap_width_report: empty p list");
  for (double p : p_list)
    if (!(p >= 2.0)) throw std::domain_error("gap_width_report: p list must lie in [2, inf)");
  std::sort(p_list.begin(), p_list.end());

  std::vector<GapRow> rows;
  rows.reserve(p_list.size());
  for (double p : p_list) {
    TrialConfig config = base;
    config.p = p;
    config.honest = false;
    config.delta_lo = base.eps;
    config.delta_hi = 2.5 * base.eps;
    config.validate();
    const ProtocolResult run = run_protocol(config);
    GapRow row;
    row.p = p;
    row.accept_coefficient = run.thresholds.accept_coefficient;
    row.reject_coefficient = *run.thresholds.reject_coefficient;
    row.gap_width = *run.thresholds.gap_width();
    row.undecided_rate =
        static_cast<double>(run.summary.undecided) / static_cast<double>(config.trials);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace renstab
