#include "regimekit/library.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace regimekit {

Library::Library(double tau) : tau_(tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("library tau must be > 0");
}

std::vector<double> Library::mus() const {
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const auto& s : entries_) out.push_back(s.mu());
    return out;
}

std::ptrdiff_t Library::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].id() == id) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
}

void Library::restore_entry(Specialist s) {
    if (index_of(s.id()) >= 0) throw std::invalid_argument("duplicate specialist id '" + s.id() + "'");
    entries_.push_back(std::move(s));
}

VettingReport Library::admit(const Specialist& cand, std::span<const StateSample> validation) {
    VettingReport rep = vet_candidate(*this, cand, validation);
    if (rep.admitted) {
        std::string id = cand.id();
        for (int n = 2; index_of(id) >= 0; ++n) id = cand.id() + "_" + std::to_string(n);
        rep.candidate_id = id;
        entries_.push_back(cand.with_id(id));
    }
    return rep;
}

namespace {

struct Design {
    Eigen::MatrixXd P;  // predictions, one column per specialist
    Eigen::VectorXd y;
};

Design build_design(const Library& lib, std::span<const StateSample> validation) {
    std::size_t n = 0;
    for (const auto& x : validation) n += x.a_obs ? 1 : 0;
    if (n == 0) throw std::invalid_argument("validation set has no observed samples");
    Design d{Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(lib.size())),
             Eigen::VectorXd(static_cast<Eigen::Index>(n))};
    Eigen::Index row = 0;
    for (const auto& x : validation) {
        if (!x.a_obs) continue;
        d.y(row) = *x.a_obs;
        for (std::size_t k = 0; k < lib.size(); ++k) d.P(row, static_cast<Eigen::Index>(k)) = lib[k].predict(x).a_hat;
        ++row;
    }
    return d;
}

double blend_mse(const Design& d, const Eigen::VectorXd& w) {
    return (d.y - d.P * w).squaredNorm() / static_cast<double>(d.y.size());
}

}  // namespace

double mean_squared_error(const Specialist& s, std::span<const StateSample> validation) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& x : validation) {
        if (!x.a_obs) continue;
        const double e = *x.a_obs - s.predict(x).a_hat;
        sum += e * e;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("validation set has no observed samples");
    return sum / static_cast<double>(n);
}

ComboFit best_convex_combination_error(const Library& lib, std::span<const StateSample> validation, int iterations) {
    if (lib.empty()) {
        throw std::invalid_argument("library is empty: no convex combination exists, admit the candidate unconditionally");
    }
    const Design d = build_design(lib, validation);
    const auto K = d.P.cols();
    const double T = static_cast<double>(d.y.size());

    // Start from the best single specialist so the result never loses to a vertex.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
    double best = kInfinity;
    Eigen::Index best_k = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
        const double e = (d.y - d.P.col(k)).squaredNorm() / T;
        if (e < best) {
            best = e;
            best_k = k;
        }
    }
    w(best_k) = 1.0;

    const Eigen::MatrixXd H = d.P.transpose() * d.P * (2.0 / T);
    const Eigen::VectorXd lin = d.P.transpose() * d.y * (2.0 / T);
    const double lipschitz = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();

    Eigen::VectorXd best_w = w;
    if (K > 1 && lipschitz > 0.0) {
        // Accelerated projected gradient with function-value restart; plain
        // PGD crawls along faces whose specialists predict almost alike.
        const double step = 1.0 / lipschitz;
        std::vector<double> buf(static_cast<std::size_t>(K));
        Eigen::VectorXd y = w;
        double t = 1.0;
        double prev = best;
        for (int it = 0; it < iterations; ++it) {
            const Eigen::VectorXd trial = y - step * (H * y - lin);
            std::copy(trial.data(), trial.data() + K, buf.begin());
            const auto proj = project_to_simplex(buf);
            const Eigen::VectorXd next = Eigen::Map<const Eigen::VectorXd>(proj.data(), K);
            const double e = blend_mse(d, next);
            const double delta = (next - w).lpNorm<Eigen::Infinity>();
            if (e > prev) {
                t = 1.0;
                y = w;
                continue;
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = next + ((t - 1.0) / t_next) * (next - w);
            t = t_next;
            w = next;
            prev = e;
            if (e < best) {
                best = e;
                best_w = w;
            }
            if (delta < 1e-15) break;
        }
    }
    return {MixWeights(std::vector<double>(best_w.data(), best_w.data() + K)), best};
}

VettingReport vet_candidate(const Library& lib, const Specialist& cand, std::span<const StateSample> validation) {
    if (validation.empty()) throw std::invalid_argument("validation set is empty");
    VettingReport rep;
    rep.candidate_id = cand.id();
    rep.candidate_mu = cand.mu();
    rep.candidate_error = mean_squared_error(cand, validation);
    if (lib.empty()) {
        rep.best_combo_error = kInfinity;
        rep.admitted = true;
        return rep;
    }
    const ComboFit combo = best_convex_combination_error(lib, validation);
    rep.best_combo_error = combo.error;
    rep.combo_weights = combo.weights;
    rep.admitted = rep.candidate_error < combo.error - lib.tau();
    return rep;
}

double coverage_residual(const Library& lib, std::span<const StateSample> probe) {
    if (lib.empty()) return kInfinity;
    return best_convex_combination_error(lib, probe).error;
}

AccretionResult accrete(Library lib, std::span<const double> param_grid, const DataSource& data,
                        const CandidateFactory& make_candidate) {
    if (param_grid.empty()) throw std::invalid_argument("parameter grid is empty");

    struct Point {
        double mu;
        std::vector<StateSample> samples;
        double energy;  // residual against the empty (zero) predictor
    };
    std::vector<Point> pool;
    for (double mu : param_grid) {
        if (std::any_of(pool.begin(), pool.end(), [&](const Point& p) { return p.mu == mu; })) continue;
        Point p{mu, data(mu), 0.0};
        std::size_t n = 0;
        for (const auto& x : p.samples) {
            if (!x.a_obs) continue;
            p.energy += *x.a_obs * *x.a_obs;
            ++n;
        }
        if (n == 0) throw std::invalid_argument("data source returned no observed samples");
        p.energy /= static_cast<double>(n);
        pool.push_back(std::move(p));
    }

    AccretionResult result{std::move(lib), {}, 0};
    while (!pool.empty()) {
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t i = 0; i < pool.size(); ++i) order.emplace_back(coverage_residual(result.library, pool[i].samples), i);
        std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return pool[a.second].energy > pool[b.second].energy;
        });

        bool admitted = false;
        std::vector<std::size_t> spent;
        for (const auto& [residual, idx] : order) {
            const Point& p = pool[idx];
            VettingReport rep = result.library.admit(make_candidate(p.mu), p.samples);
            spent.push_back(idx);
            admitted = rep.admitted;
            result.log.push_back(std::move(rep));
            if (admitted) {
                ++result.admitted;
                break;
            }
        }
        std::sort(spent.rbegin(), spent.rend());
        for (std::size_t idx : spent) pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
        if (!admitted) break;
    }
    return result;
}

}  // namespace regimekit
