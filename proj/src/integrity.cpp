#include "regimekit/integrity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace regimekit {

std::string to_string(Status s) {
    switch (s) {
        case Status::Nominal: return "Nominal";
        case Status::PeacefulSuccession: return "PeacefulSuccession";
        case Status::RegimeShock: return "RegimeShock";
        case Status::HungParliament: return "HungParliament";
        case Status::ConstitutionalFailure: return "ConstitutionalFailure";
    }
    return "Nominal";
}

Status status_from_string(const std::string& s) {
    for (Status st : {Status::Nominal, Status::PeacefulSuccession, Status::RegimeShock, Status::HungParliament,
                      Status::ConstitutionalFailure}) {
        if (to_string(st) == s) return st;
    }
    throw std::invalid_argument("unknown status '" + s + "'");
}

double consensus_residual(const MixWeights& pi, std::span<const double> losses) {
    if (pi.size() != losses.size()) throw std::invalid_argument("consensus_residual: length mismatch");
    for (double l : losses) {
        if (l < 0.0 || std::isnan(l)) throw std::invalid_argument("consensus_residual: losses must be >= 0");
    }
    double r = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) {
        if (pi[k] == 0.0) continue;  // 0 * inf is taken as 0
        r += pi[k] * losses[k];
    }
    return std::max(0.0, r);
}

double ambiguity(const MixWeights& pi) {
    double h = 0.0;
    for (double p : pi.values()) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::clamp(h, 0.0, std::log(static_cast<double>(pi.size())));
}

double stability(const MixWeights& now, const MixWeights& prev, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("stability: dt must be > 0");
    if (now.size() != prev.size()) throw std::invalid_argument("stability: length mismatch");
    double l1 = 0.0;
    for (std::size_t k = 0; k < now.size(); ++k) l1 += std::abs(now[k] - prev[k]);
    return l1 / dt;
}

CusumStep cusum_update(CusumState c, double R) {
    c.stat = std::max(0.0, c.stat + (R - c.baseline - c.drift_k));
    return {c, c.stat > c.threshold_h};
}

Status classify(double R, double U, double T, const ClassifyFlags& f, const ClassifyThresholds& th) {
    if ((f.cusum_alarm && f.r_persistent) || f.envelope_exit) return Status::ConstitutionalFailure;
    if (U > th.U_hi && R > th.R_mid) return Status::HungParliament;
    if (T > th.T_hi && U <= th.U_hi) return Status::RegimeShock;
    if (T > 0.0 && T <= th.T_hi && f.trend_monotone) return Status::PeacefulSuccession;
    return Status::Nominal;
}

ClassifyThresholds IntegrityConfig::thresholds(std::size_t k, double dt) const {
    return {R_hi, R_mid, U_hi_frac * std::log(static_cast<double>(k)), T_hi_per_dt / dt};
}

void IntegrityConfig::validate() const {
    if (!(R_hi > 0.0 && R_mid > 0.0)) throw std::invalid_argument("integrity.R_hi and integrity.R_mid must be > 0");
    if (!(U_hi_frac > 0.0 && U_hi_frac <= 1.0)) throw std::invalid_argument("integrity.U_hi_frac must be in (0,1]");
    if (!(T_hi_per_dt > 0.0)) throw std::invalid_argument("integrity.T_hi_per_dt must be > 0");
    if (persist_window < 1) throw std::invalid_argument("integrity.persist_window must be >= 1");
    if (trend_window < 2) throw std::invalid_argument("integrity.trend_window must be >= 2");
    if (!(cusum_drift_k >= 0.0 && cusum_threshold_h > 0.0)) throw std::invalid_argument("integrity.cusum parameters invalid");
}

IntegrityMonitor::IntegrityMonitor(IntegrityConfig cfg, std::size_t k, double dt)
    : cfg_(cfg), th_(cfg.thresholds(k, dt)), dt_(dt) {
    cfg_.validate();
    cusum_.baseline = cfg_.cusum_baseline;
    cusum_.drift_k = cfg_.cusum_drift_k;
    cusum_.threshold_h = cfg_.cusum_threshold_h;
}

bool IntegrityMonitor::trend_is_monotone() const {
    if (history_.size() < static_cast<std::size_t>(cfg_.trend_window) + 1) return false;
    const auto& last = history_.back();
    const auto k = static_cast<std::size_t>(std::max_element(last.begin(), last.end()) - last.begin());
    int sign = 0;
    for (std::size_t i = 1; i < history_.size(); ++i) {
        const double d = history_[i][k] - history_[i - 1][k];
        const int s = (d > 0.0) - (d < 0.0);
        if (s == 0) return false;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

IntegrityReport IntegrityMonitor::observe(const MixWeights& pi, const MixWeights& pi_prev, std::span<const double> losses,
                                          bool envelope_exit, bool no_jurisdiction, bool likelihood_collapse) {
    IntegrityReport r;
    r.R = consensus_residual(pi, losses);
    r.U = ambiguity(pi);
    r.T = stability(pi, pi_prev, dt_);
    r.envelope_exit = envelope_exit || no_jurisdiction;
    r.no_jurisdiction = no_jurisdiction;
    r.likelihood_collapse = likelihood_collapse;

    const double r_for_cusum = std::isfinite(r.R) ? r.R : 1e12;
    const CusumStep step = cusum_update(cusum_, r_for_cusum);
    cusum_ = step.state;
    r.cusum_alarm = step.alarm;

    high_run_ = (r.R > th_.R_hi || likelihood_collapse) ? high_run_ + 1 : 0;

    if (history_.size() > static_cast<std::size_t>(cfg_.trend_window)) {
        // Recycle the oldest row's storage.
        std::vector<double> row = std::move(history_.front());
        history_.pop_front();
        row.assign(pi.values().begin(), pi.values().end());
        history_.push_back(std::move(row));
    } else {
        history_.emplace_back(pi.values().begin(), pi.values().end());
    }
    while (history_.size() > static_cast<std::size_t>(cfg_.trend_window) + 1) history_.pop_front();

    ClassifyFlags flags;
    flags.cusum_alarm = r.cusum_alarm;
    flags.r_persistent = high_run_ >= cfg_.persist_window;
    flags.envelope_exit = r.envelope_exit;
    flags.trend_monotone = trend_is_monotone();
    r.status = classify(r.R, r.U, r.T, flags, th_);
    return r;
}

}  // namespace regimekit
