#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace regimekit {

inline constexpr double kGravity = 9.81;

/// One observation of the longitudinal braking problem.
/// `a_obs` is absent for pure prediction queries.
struct StateSample {
    double t = 0.0;
    double v = 0.0;
    double b = 0.0;
    std::optional<double> a_obs;
};

struct Interval1 {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return lo <= x && x <= hi; }
};

enum class Family { Analytic, Affine };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Loss shaping shared by all specialists.
struct LossConfig {
    double mu_max = 1.2;   // largest physically plausible friction
    double w_physics = 1.0;
    double b_min = 0.05;   // below this braking demand friction is unidentifiable
};

struct Prediction {
    double a_hat = 0.0;
};

/// Frozen regime model. Construct through make_analytic / fit_affine /
/// Specialist::restore; there are no mutators.
class Specialist {
public:
    static Specialist restore(std::string id, Family family, double mu, std::vector<double> params,
                              double sigma, Interval1 jurisdiction);

    const std::string& id() const { return id_; }
    Family family() const { return family_; }
    double mu() const { return mu_; }
    std::span<const double> params() const { return params_; }
    double sigma() const { return sigma_; }
    Interval1 jurisdiction() const { return jurisdiction_; }

    Prediction predict(const StateSample& x) const;

    /// Raw bytes of the frozen parameter block (params, mu, sigma, jurisdiction).
    std::vector<unsigned char> param_bytes() const;

    Specialist with_id(std::string id) const;

private:
    Specialist() = default;

    std::string id_;
    Family family_ = Family::Analytic;
    double mu_ = 0.0;
    std::vector<double> params_;
    double sigma_ = 1.0;
    Interval1 jurisdiction_;
};

/// Thrown when a sample without an observation reaches a loss evaluation.
class PredictionOnlySample : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class RankDeficient : public std::runtime_error {
public:
    RankDeficient(const std::string& column);
    const std::string& column() const { return column_; }

private:
    std::string column_;
};

double physics_penalty(const StateSample& x, const LossConfig& cfg = {});
double residual_loss(const Specialist& s, const StateSample& x, const LossConfig& cfg = {});

Specialist make_analytic(double mu, double sigma, Interval1 jurisdiction, std::string id = {});

struct AffineFitConfig {
    double sigma_min = 1e-3;
    double jurisdiction_halfwidth = 0.1;
};

/// Least-squares fit of a_obs on [1, v, b].
Specialist fit_affine(std::span<const StateSample> samples, const AffineFitConfig& cfg = {},
                      std::string id = {});

}  // namespace regimekit
