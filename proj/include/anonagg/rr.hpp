#ifndef ANONAGG_RR_HPP
#define ANONAGG_RR_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "anonagg/rng.hpp"

namespace anonagg {

// Two-coin randomized response. A respondent flips the first coin (heads
// bias p); on heads they answer truthfully, on tails they report the second
// coin (heads bias q). Heads is "yes" (1), tails "no" (0). So
//   Pr[1 | truth=1] = p + (1-p)q      Pr[1 | truth=0] = (1-p)q
// and the analyst can debias aggregate counts with estimate_population().

struct PrivacyParams {
  double p = 0.0;  // first coin heads bias: answer truthfully
  double q = 0.0;  // second coin heads bias: forced "yes"

  // Throws std::invalid_argument unless both biases are in [0, 1].
  static PrivacyParams create(double p, double q);

  // False when (1-p)q == 0: a "yes" then cannot come from a truthful "no",
  // the response ratio is unbounded and epsilon() is infinite.
  bool plausible_deniability() const { return (1.0 - p) * q > 0.0; }

  double prob_yes_given_yes() const { return p + (1.0 - p) * q; }
  double prob_yes_given_no() const { return (1.0 - p) * q; }
};

// A respondent's privatized answer vector: one bit per sensitive attribute.
// The interface only admits bools, so out-of-range "answers" that could
// distort an aggregate are unrepresentable by construction.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(size_t attribute_count)
      : bits_(attribute_count, 0) {}
  explicit BitVector(const std::vector<bool>& bits);

  size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool get(size_t i) const { return bits_.at(i) != 0; }
  void set(size_t i, bool value) { bits_.at(i) = value ? 1 : 0; }
  size_t popcount() const;

  bool operator==(const BitVector& other) const = default;

  // Wire encoding: bit i goes to byte i/8, LSB-first. Packed length is
  // ceil(size/8), zero-padded up to message_bytes when longer.
  std::vector<uint8_t> pack(size_t message_bytes) const;
  static BitVector unpack(std::span<const uint8_t> bytes,
                          size_t attribute_count);

 private:
  std::vector<uint8_t> bits_;  // each element 0 or 1
};

// One application of the two-coin mechanism.
bool randomize_bit(bool truth, const PrivacyParams& params, Rng& rng);

// Element-wise independent randomization; rejects empty input.
BitVector randomize_vector(const BitVector& truth, const PrivacyParams& params,
                           Rng& rng);

struct PopulationEstimate {
  uint64_t raw_yes_count = 0;   // observed "yes" responses
  uint64_t respondent_count = 0;
  double estimate = 0.0;        // debiased count, may be negative or exceed N
};

// Debiased population count (raw_yes - (1-p) q n) / p on real inputs.
// Throws when p == 0 (the estimator is undefined).
double estimate_value(double raw_yes, double n, const PrivacyParams& params);

PopulationEstimate estimate_population(uint64_t raw_yes_count, uint64_t n,
                                       const PrivacyParams& params);

// Differential-privacy parameter ln((p+(1-p)q) / ((1-p)q)).
// Throws "infinite epsilon" for degenerate params.
double epsilon(const PrivacyParams& params);

struct LeakageReport {
  double p_a_given_yes = 0.0;      // P(A | Yes)
  double p_not_a_given_yes = 0.0;  // P(!A | Yes)
  double epsilon = 0.0;
  double pi_a = 0.0;               // underlying population fraction
};

// Posterior attacker view of a single "yes" given prior pi_a:
//   P(Yes)    = p pi_a + (1-p) q
//   P(A|Yes)  = pi_a (p + (1-p) q) / P(Yes)
//   P(!A|Yes) = (1-pi_a) (1-p) q  / P(Yes)
LeakageReport leakage(const PrivacyParams& params, double pi_a);

// Across-station root mean squared error of paired estimates vs actuals.
double rmse(std::span<const double> estimates, std::span<const double> actuals);

// Magnitude form |(actual - estimate)/actual|; throws when actual == 0.
double relative_error(double estimate, double actual);

// Signed form (estimate - actual)/actual, kept because the averaged signed
// error is the headline experiment metric and can be negative.
double signed_relative_error(double estimate, double actual);

}  // namespace anonagg

#endif
