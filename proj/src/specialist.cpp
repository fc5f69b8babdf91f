#include "regimekit/specialist.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <sstream>

namespace regimekit {

namespace {

void require_finite(const StateSample& x) {
    if (!std::isfinite(x.t) || !std::isfinite(x.v) || !std::isfinite(x.b) ||
        (x.a_obs && !std::isfinite(*x.a_obs))) {
        throw std::domain_error("state sample contains a non-finite value");
    }
}

std::string default_id(Family f, double mu) {
    std::ostringstream os;
    os.precision(6);
    os << (f == Family::Analytic ? "analytic" : "affine") << "_mu" << mu;
    return os.str();
}

}  // namespace

std::string to_string(Family f) { return f == Family::Analytic ? "analytic" : "affine"; }

Family family_from_string(const std::string& s) {
    if (s == "analytic") return Family::Analytic;
    if (s == "affine") return Family::Affine;
    throw std::invalid_argument("unknown specialist family '" + s + "'");
}

Specialist Specialist::restore(std::string id, Family family, double mu, std::vector<double> params,
                               double sigma, Interval1 jurisdiction) {
    if (id.empty()) throw std::invalid_argument("specialist id must not be empty");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("specialist sigma must be > 0");
    if (!(jurisdiction.lo <= jurisdiction.hi)) throw std::invalid_argument("jurisdiction lower > upper");
    if (!jurisdiction.contains(mu)) throw std::invalid_argument("specialist mu outside its jurisdiction");
    const std::size_t expected = family == Family::Analytic ? 1 : 3;
    if (params.size() != expected) {
        throw std::invalid_argument("specialist '" + id + "' expects " + std::to_string(expected) +
                                    " parameters");
    }
    for (double p : params) {
        if (!std::isfinite(p)) throw std::invalid_argument("specialist parameters must be finite");
    }
    Specialist s;
    s.id_ = std::move(id);
    s.family_ = family;
    s.mu_ = mu;
    s.params_ = std::move(params);
    s.sigma_ = sigma;
    s.jurisdiction_ = jurisdiction;
    return s;
}

Prediction Specialist::predict(const StateSample& x) const {
    require_finite(x);
    if (x.b < 0.0 || x.b > 1.0) throw std::domain_error("braking demand outside [0,1]");
    if (family_ == Family::Analytic) return {params_[0] * kGravity * x.b};
    return {params_[0] + params_[1] * x.v + params_[2] * x.b};
}

std::vector<unsigned char> Specialist::param_bytes() const {
    std::vector<double> block = params_;
    block.push_back(mu_);
    block.push_back(sigma_);
    block.push_back(jurisdiction_.lo);
    block.push_back(jurisdiction_.hi);
    std::vector<unsigned char> out(block.size() * sizeof(double));
    std::memcpy(out.data(), block.data(), out.size());
    return out;
}

Specialist Specialist::with_id(std::string id) const {
    return restore(std::move(id), family_, mu_, params_, sigma_, jurisdiction_);
}

RankDeficient::RankDeficient(const std::string& column)
    : std::runtime_error("design matrix is rank deficient in column '" + column + "'"), column_(column) {}

double physics_penalty(const StateSample& x, const LossConfig& cfg) {
    if (!x.a_obs || x.b <= cfg.b_min) return 0.0;
    const double implied_mu = std::abs(*x.a_obs) / (kGravity * x.b);
    const double excess = std::max(0.0, implied_mu - cfg.mu_max);
    return cfg.w_physics * excess * excess;
}

double residual_loss(const Specialist& s, const StateSample& x, const LossConfig& cfg) {
    if (!x.a_obs) throw PredictionOnlySample("sample at t=" + std::to_string(x.t) + " is prediction-only");
    const double e = *x.a_obs - s.predict(x).a_hat;
    return e * e / (s.sigma() * s.sigma()) + physics_penalty(x, cfg);
}

Specialist make_analytic(double mu, double sigma, Interval1 jurisdiction, std::string id) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    if (!jurisdiction.contains(mu)) {
        throw std::invalid_argument("mu=" + std::to_string(mu) + " outside jurisdiction [" +
                                    std::to_string(jurisdiction.lo) + ", " + std::to_string(jurisdiction.hi) + "]");
    }
    if (id.empty()) id = default_id(Family::Analytic, mu);
    return Specialist::restore(std::move(id), Family::Analytic, mu, {mu}, sigma, jurisdiction);
}

Specialist fit_affine(std::span<const StateSample> samples, const AffineFitConfig& cfg, std::string id) {
    std::vector<const StateSample*> usable;
    for (const auto& s : samples) {
        if (s.a_obs) usable.push_back(&s);
    }
    if (usable.size() < 3) {
        throw std::invalid_argument("fit_affine needs at least 3 observed samples, got " +
                                    std::to_string(usable.size()));
    }
    const auto n = static_cast<Eigen::Index>(usable.size());
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = *usable[static_cast<std::size_t>(i)];
        require_finite(s);
        X(i, 0) = 1.0;
        X(i, 1) = s.v;
        X(i, 2) = s.b;
        y(i) = *s.a_obs;
    }

    // Columns are added in order; the first one that does not raise the rank is reported.
    static const char* names[] = {"intercept", "v", "b"};
    for (Eigen::Index c = 1; c <= 3; ++c) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X.leftCols(c));
        qr.setThreshold(1e-10);
        if (qr.rank() < c) throw RankDeficient(names[c - 1]);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    const Eigen::Vector3d theta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * theta;
    const double dof = std::max<double>(1.0, static_cast<double>(n) - 3.0);
    const double sigma = std::max(cfg.sigma_min, std::sqrt(resid.squaredNorm() / dof));
    const double mu = theta(2) / kGravity;
    const Interval1 jur{mu - cfg.jurisdiction_halfwidth, mu + cfg.jurisdiction_halfwidth};
    if (id.empty()) id = default_id(Family::Affine, mu);
    return Specialist::restore(std::move(id), Family::Affine, mu, {theta(0), theta(1), theta(2)}, sigma, jur);
}

}  // namespace regimekit
