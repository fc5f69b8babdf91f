#include "regimekit/conformal.hpp"
#include "regimekit/governor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace regimekit {

double conformal_quantile(std::span<const double> sorted_scores, double eps_level) {
    if (!(eps_level > 0.0 && eps_level < 1.0)) throw std::invalid_argument("eps_level must be in (0,1)");
    const double n = static_cast<double>(sorted_scores.size());
    // Guard the ceiling against products like 100 * 0.9 = 90.00000000000001.
    const double raw = (n + 1.0) * (1.0 - eps_level);
    const auto index = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    if (index == 0) return sorted_scores.empty() ? kInfinity : sorted_scores.front();
    if (index > sorted_scores.size()) return kInfinity;
    return sorted_scores[index - 1];
}

CalibrationRecord CalibrationRecord::from_scores(std::string id, std::vector<double> scores, double eps_level) {
    std::sort(scores.begin(), scores.end());
    CalibrationRecord r;
    r.specialist_id = std::move(id);
    r.eps_level = eps_level;
    r.q = conformal_quantile(scores, eps_level);
    r.scores = std::move(scores);
    return r;
}

void CalibrationRecord::validate() const {
    if (!std::is_sorted(scores.begin(), scores.end())) throw std::invalid_argument("calibration scores must be sorted");
    for (double s : scores) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("calibration scores must be finite and >= 0");
    }
    const double expect = conformal_quantile(scores, eps_level);
    if (!(expect == q)) throw std::invalid_argument("calibration record '" + specialist_id + "' quantile does not match its scores");
}

CalibrationRecord calibrate(const Specialist& s, std::span<const StateSample> samples, double eps_level) {
    if (!(eps_level > 0.0 && eps_level < 1.0)) throw std::invalid_argument("eps_level must be in (0,1)");
    std::vector<double> scores;
    for (const auto& x : samples) {
        if (x.a_obs) scores.push_back(std::abs(*x.a_obs - s.predict(x).a_hat));
    }
    const auto min_n = static_cast<std::size_t>(std::ceil(1.0 / eps_level - 1e-9));
    if (scores.size() < min_n) {
        throw std::invalid_argument("calibration needs at least " + std::to_string(min_n) + " observed samples, got " +
                                    std::to_string(scores.size()));
    }
    return CalibrationRecord::from_scores(s.id(), std::move(scores), eps_level);
}

PredictionInterval interval(const MixWeights& pi, std::span<const Prediction> predictions,
                            std::span<const CalibrationRecord> records) {
    if (pi.size() != predictions.size() || pi.size() != records.size()) {
        throw std::invalid_argument("interval: weights, predictions and records differ in length");
    }
    const double center = blend(pi, predictions).a_hat;
    double half = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) {
        if (pi[k] == 0.0) continue;
        if (!std::isfinite(records[k].q)) return {-kInfinity, kInfinity, true};
        half += pi[k] * records[k].q;
    }
    return {center - half, center + half, false};
}

double empirical_coverage(std::span<const double> observations, std::span<const PredictionInterval> intervals) {
    if (observations.empty()) throw std::invalid_argument("empirical_coverage: empty trace");
    if (observations.size() != intervals.size()) throw std::invalid_argument("empirical_coverage: length mismatch");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < observations.size(); ++i) hit += intervals[i].contains(observations[i]) ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(observations.size());
}

}  // namespace regimekit
