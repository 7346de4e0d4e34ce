#pragma once

// Channel and CSIT-error generation. The CSIT error has i.i.d. CN(0, P^-alpha)
// entries, P being the nominal transmit power of the experiment.

#include <cmath>
#include <limits>
#include <vector>

#include "rsmmf/numerics.hpp"

namespace rsmmf {

struct CsitModel {
  double alpha = 1.0;
  double power_ref = 1.0;
  bool perfect = false;

  static CsitModel perfect_csit() { return {1.0, 1.0, true}; }

  static CsitModel scaling(double alpha, double power_ref) {
    if (std::isinf(alpha) && alpha > 0) return perfect_csit();
    detail::require(alpha >= 0.0 && alpha <= 1.0, "CsitModel: alpha must lie in [0, 1]");
    detail::require(power_ref > 0.0, "CsitModel: power_ref must be positive");
    return {alpha, power_ref, false};
  }

  /// Per-entry error variance.
  double error_variance() const { return perfect ? 0.0 : std::pow(power_ref, -alpha); }
};

struct CsitSample {
  ComplexMatrix channel;   // H
  ComplexMatrix estimate;  // H_hat
  ComplexMatrix error;     // H_tilde
};

/// S channel realizations sharing one estimate.
struct ConditionalSampleSet {
  ComplexMatrix estimate;
  std::vector<ComplexMatrix> realizations;

  int size() const { return static_cast<int>(realizations.size()); }
};

inline ComplexMatrix sample_complex_gaussian(int rows, int cols, double variance,
                                             RandomStream& stream) {
  ComplexMatrix out(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) out(i, j) = stream.complex_normal(variance);
  return out;
}

/// i.i.d. CN(0, 1) entries.
inline ComplexMatrix sample_rayleigh(int nt, int k, RandomStream& stream) {
  detail::require(nt >= 1 && k >= 1, "sample_rayleigh: dimensions must be positive");
  return sample_complex_gaussian(nt, k, 1.0, stream);
}

/// i.i.d. CN(0, P^-alpha) entries; all zero for perfect CSIT.
///
/// The standard-normal draws do not depend on the model, so the same stream
/// yields errors that differ between models only by scale.
inline ComplexMatrix sample_error(int nt, int k, const CsitModel& model, RandomStream& stream) {
  detail::require(nt >= 1 && k >= 1, "sample_error: dimensions must be positive");
  if (model.perfect) return ComplexMatrix::Zero(nt, k);
  return sample_complex_gaussian(nt, k, model.error_variance(), stream);
}

/// Draws an error and forms H_hat = H - H_tilde.
inline CsitSample split_estimate(const ComplexMatrix& h, const CsitModel& model,
                                 RandomStream& stream) {
  CsitSample s;
  s.channel = h;
  s.error = sample_error(static_cast<int>(h.rows()), static_cast<int>(h.cols()), model, stream);
  s.estimate = h - s.error;
  // Recompute the error from the rounded estimate so H = H_hat + H_tilde holds exactly.
  s.error = h - s.estimate;
  return s;
}

inline ConditionalSampleSet conditional_samples(const ComplexMatrix& estimate, int s_count,
                                                const CsitModel& model, RandomStream& stream) {
  detail::require(s_count >= 1, "conditional_samples: need S >= 1");
  ConditionalSampleSet set;
  set.estimate = estimate;
  set.realizations.reserve(s_count);
  for (int s = 0; s < s_count; ++s)
    set.realizations.push_back(
        estimate + sample_error(static_cast<int>(estimate.rows()),
                                static_cast<int>(estimate.cols()), model, stream));
  return set;
}

}  // namespace rsmmf
