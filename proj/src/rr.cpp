#include "anonagg/rr.hpp"

#include <cmath>
#include <stdexcept>

namespace anonagg {

PrivacyParams PrivacyParams::create(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("PrivacyParams: p must be in [0,1]");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("PrivacyParams: q must be in [0,1]");
  }
  return PrivacyParams{p, q};
}

BitVector::BitVector(const std::vector<bool>& bits) {
  bits_.reserve(bits.size());
  for (bool b : bits) bits_.push_back(b ? 1 : 0);
}

size_t BitVector::popcount() const {
  size_t n = 0;
  for (uint8_t b : bits_) n += b;
  return n;
}

std::vector<uint8_t> BitVector::pack(size_t message_bytes) const {
  size_t need = (bits_.size() + 7) / 8;
  if (message_bytes < need) {
    throw std::invalid_argument("BitVector::pack: message_bytes too small");
  }
  std::vector<uint8_t> out(message_bytes, 0);
  for (size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i >> 3] |= static_cast<uint8_t>(1u << (i & 7));
  }
  return out;
}

BitVector BitVector::unpack(std::span<const uint8_t> bytes,
                            size_t attribute_count) {
  if (bytes.size() * 8 < attribute_count) {
    throw std::invalid_argument("BitVector::unpack: buffer too short");
  }
  BitVector v(attribute_count);
  for (size_t i = 0; i < attribute_count; ++i) {
    v.set(i, (bytes[i >> 3] >> (i & 7)) & 1u);
  }
  return v;
}

bool randomize_bit(bool truth, const PrivacyParams& params, Rng& rng) {
  if (rng.coin(params.p)) return truth;
  return rng.coin(params.q);
}

BitVector randomize_vector(const BitVector& truth, const PrivacyParams& params,
                           Rng& rng) {
  if (truth.empty()) {
    throw std::invalid_argument("randomize_vector: empty input");
  }
  BitVector out(truth.size());
  for (size_t i = 0; i < truth.size(); ++i) {
    out.set(i, randomize_bit(truth.get(i), params, rng));
  }
  return out;
}

double estimate_value(double raw_yes, double n, const PrivacyParams& params) {
  if (params.p == 0.0) {
    throw std::invalid_argument(
        "estimate_value: p = 0, estimator undefined");
  }
  return (raw_yes - (1.0 - params.p) * params.q * n) / params.p;
}

PopulationEstimate estimate_population(uint64_t raw_yes_count, uint64_t n,
                                       const PrivacyParams& params) {
  if (raw_yes_count > n) {
    throw std::invalid_argument(
        "estimate_population: raw_yes_count exceeds respondent_count");
  }
  PopulationEstimate e;
  e.raw_yes_count = raw_yes_count;
  e.respondent_count = n;
  e.estimate = estimate_value(static_cast<double>(raw_yes_count),
                              static_cast<double>(n), params);
  return e;
}

double epsilon(const PrivacyParams& params) {
  if (!params.plausible_deniability()) {
    throw std::domain_error("epsilon: infinite epsilon, (1-p)q = 0");
  }
  return std::log(params.prob_yes_given_yes() / params.prob_yes_given_no());
}

LeakageReport leakage(const PrivacyParams& params, double pi_a) {
  if (!(pi_a > 0.0 && pi_a < 1.0)) {
    throw std::invalid_argument("leakage: pi_a must be in (0,1)");
  }
  double p_yes = params.p * pi_a + (1.0 - params.p) * params.q;
  if (p_yes <= 0.0) {
    throw std::domain_error("leakage: P(Yes) = 0");
  }
  LeakageReport r;
  r.pi_a = pi_a;
  r.p_a_given_yes = pi_a * params.prob_yes_given_yes() / p_yes;
  r.p_not_a_given_yes = (1.0 - pi_a) * params.prob_yes_given_no() / p_yes;
  r.epsilon = epsilon(params);
  return r;
}

double rmse(std::span<const double> estimates,
            std::span<const double> actuals) {
  if (estimates.size() != actuals.size()) {
    throw std::invalid_argument("rmse: length mismatch");
  }
  if (estimates.empty()) {
    throw std::invalid_argument("rmse: empty input");
  }
  double sum_sq = 0.0;
  for (size_t i = 0; i < estimates.size(); ++i) {
    double d = estimates[i] - actuals[i];
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / static_cast<double>(estimates.size()));
}

double relative_error(double estimate, double actual) {
  if (actual == 0.0) {
    throw std::domain_error("relative_error: undefined for actual = 0");
  }
  return std::fabs((actual - estimate) / actual);
}

double signed_relative_error(double estimate, double actual) {
  if (actual == 0.0) {
    throw std::domain_error("signed_relative_error: undefined for actual = 0");
  }
  return (estimate - actual) / actual;
}

}  // namespace anonagg
