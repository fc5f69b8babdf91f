#pragma once

#include "regimekit/mix_weights.hpp"
#include "regimekit/specialist.hpp"

#include <span>
#include <string>
#include <vector>

namespace regimekit {

/// Split-conformal calibration of one specialist's absolute residuals.
struct CalibrationRecord {
    std::string specialist_id;
    double eps_level = 0.1;
    std::vector<double> scores;  // ascending
    double q = 0.0;              // +inf when the quantile index exceeds n

    static CalibrationRecord from_scores(std::string id, std::vector<double> scores, double eps_level);
    void validate() const;
};

/// The ceil((n+1)(1-eps))-th smallest score, or +inf past the end.
double conformal_quantile(std::span<const double> sorted_scores, double eps_level);

CalibrationRecord calibrate(const Specialist& s, std::span<const StateSample> samples, double eps_level);

struct PredictionInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool unbounded = false;
    bool contains(double a) const { return unbounded || (lo <= a && a <= hi); }
};

/// Center at the blended prediction, half-width sum_k pi_k q_k.
PredictionInterval interval(const MixWeights& pi, std::span<const Prediction> predictions,
                            std::span<const CalibrationRecord> records);

/// Fraction of observations inside their interval.
double empirical_coverage(std::span<const double> observations, std::span<const PredictionInterval> intervals);

}  // namespace regimekit
