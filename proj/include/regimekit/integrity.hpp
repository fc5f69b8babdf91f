#pragma once

#include "regimekit/mix_weights.hpp"

#include <deque>
#include <span>
#include <string>
#include <vector>

namespace regimekit {

enum class Status { Nominal, PeacefulSuccession, RegimeShock, HungParliament, ConstitutionalFailure };

std::string to_string(Status s);
Status status_from_string(const std::string& s);

struct IntegrityReport {
    double R = 0.0;
    double U = 0.0;
    double T = 0.0;
    Status status = Status::Nominal;
    bool cusum_alarm = false;
    bool envelope_exit = false;
    bool no_jurisdiction = false;
    bool likelihood_collapse = false;
};

double consensus_residual(const MixWeights& pi, std::span<const double> losses);
double ambiguity(const MixWeights& pi);
double stability(const MixWeights& now, const MixWeights& prev, double dt);

/// One-sided upward CUSUM on the consensus residual.
struct CusumState {
    double stat = 0.0;
    double drift_k = 1.0;
    double threshold_h = 8.0;
    double baseline = 1.0;
};

struct CusumStep {
    CusumState state;
    bool alarm = false;
};

CusumStep cusum_update(CusumState c, double R);

struct ClassifyThresholds {
    double R_hi = 9.0;
    double R_mid = 2.0;
    double U_hi = 0.0;  // 0.8 ln K when built through IntegrityConfig
    double T_hi = 0.0;  // 0.5 / dt when built through IntegrityConfig
};

struct ClassifyFlags {
    bool cusum_alarm = false;
    bool r_persistent = false;  // R > R_hi for the persistence window
    bool envelope_exit = false;
    bool trend_monotone = false;
};

/// Priority-ordered governance status rules; total over all inputs.
Status classify(double R, double U, double T, const ClassifyFlags& flags, const ClassifyThresholds& th);

struct IntegrityConfig {
    double R_hi = 9.0;
    double R_mid = 2.0;
    double U_hi_frac = 0.8;  // fraction of ln K
    double T_hi_per_dt = 0.5;
    int persist_window = 10;
    int trend_window = 20;
    double cusum_baseline = 1.0;
    double cusum_drift_k = 1.4142135623730951;  // sigma of a chi-square(1) residual
    double cusum_threshold_h = 11.313708498984761;

    ClassifyThresholds thresholds(std::size_t k, double dt) const;
    void validate() const;
};

/// Sequential monitor owning the CUSUM statistic and the persistence and trend windows.
class IntegrityMonitor {
public:
    IntegrityMonitor(IntegrityConfig cfg, std::size_t k, double dt);

    IntegrityReport observe(const MixWeights& pi, const MixWeights& pi_prev, std::span<const double> losses,
                            bool envelope_exit, bool no_jurisdiction, bool likelihood_collapse);

    const CusumState& cusum() const { return cusum_; }

private:
    bool trend_is_monotone() const;

    IntegrityConfig cfg_;
    ClassifyThresholds th_;
    double dt_;
    CusumState cusum_;
    int high_run_ = 0;
    std::deque<std::vector<double>> history_;
};

}  // namespace regimekit
