#include "regimekit/assurance.hpp"
#include "regimekit/lp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace regimekit {

Zonotope::Zonotope(Eigen::VectorXd c, Eigen::MatrixXd g) : center(std::move(c)), generators(std::move(g)) {
    if (center.size() < 1) throw std::invalid_argument("zonotope dimension must be >= 1");
    if (generators.cols() > 0 && generators.rows() != center.size()) {
        throw std::invalid_argument("zonotope generator rows must match the center dimension");
    }
    if (generators.cols() == 0) generators.resize(center.size(), 0);
    if (!center.allFinite() || !generators.allFinite()) throw std::invalid_argument("zonotope must be finite");
}

Zonotope Zonotope::interval(double center, double radius) {
    return Zonotope(Eigen::VectorXd::Constant(1, center), Eigen::MatrixXd::Constant(1, 1, radius));
}

Zonotope Zonotope::box(const Eigen::VectorXd& center, const Eigen::VectorXd& radii) {
    return Zonotope(center, radii.asDiagonal().toDenseMatrix());
}

Eigen::VectorXd Zonotope::radii() const {
    if (generators.cols() == 0) return Eigen::VectorXd::Zero(dim());
    return generators.cwiseAbs().rowwise().sum();
}

Zonotope linear_map(const Eigen::MatrixXd& A, const Zonotope& z) {
    if (A.cols() != z.dim()) throw std::invalid_argument("linear_map: dimension mismatch");
    return Zonotope(A * z.center, A * z.generators);
}

Zonotope minkowski_sum(const Zonotope& a, const Zonotope& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("minkowski_sum: dimension mismatch");
    Eigen::MatrixXd g(a.dim(), a.order() + b.order());
    g << a.generators, b.generators;
    return Zonotope(a.center + b.center, g);
}

Zonotope reduce_order(const Zonotope& z, Eigen::Index max_generators) {
    const Eigen::Index n = z.dim();
    std::vector<Eigen::Index> keep_idx;
    for (Eigen::Index j = 0; j < z.order(); ++j) {
        if (z.generators.col(j).cwiseAbs().maxCoeff() > 0.0) keep_idx.push_back(j);
    }
    if (static_cast<Eigen::Index>(keep_idx.size()) <= max_generators) {
        Eigen::MatrixXd g(n, static_cast<Eigen::Index>(keep_idx.size()));
        for (std::size_t i = 0; i < keep_idx.size(); ++i) g.col(static_cast<Eigen::Index>(i)) = z.generators.col(keep_idx[i]);
        return Zonotope(z.center, g);
    }
    if (max_generators < n) throw std::invalid_argument("reduce_order: need at least n generators");

    // Sort by (L1 - Linf) norm, the usual Girard ordering; smallest are boxed.
    std::stable_sort(keep_idx.begin(), keep_idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        const auto ga = z.generators.col(a), gb = z.generators.col(b);
        return ga.lpNorm<1>() - ga.lpNorm<Eigen::Infinity>() > gb.lpNorm<1>() - gb.lpNorm<Eigen::Infinity>();
    });
    const Eigen::Index kept = max_generators - n;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, max_generators);
    Eigen::VectorXd boxed = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < keep_idx.size(); ++i) {
        const auto col = z.generators.col(keep_idx[i]);
        if (static_cast<Eigen::Index>(i) < kept) g.col(static_cast<Eigen::Index>(i)) = col;
        else boxed += col.cwiseAbs();
    }
    for (Eigen::Index d = 0; d < n; ++d) g(d, kept + d) = boxed(d);
    return Zonotope(z.center, g);
}

std::optional<bool> box_membership(const Zonotope& z, const Eigen::VectorXd& x) {
    const Eigen::Index n = z.dim();
    if (z.order() != n || x.size() != n) return std::nullopt;
    const double* g = z.generators.data();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = g[j * n + i];
            if ((i == j) != (v != 0.0)) return std::nullopt;
        }
    }
    for (Eigen::Index d = 0; d < n; ++d) {
        if (std::abs(x(d) - z.center(d)) > std::abs(g[d * n + d])) return false;
    }
    return true;
}

bool hull_contains(const std::vector<const Zonotope*>& zs, const Eigen::VectorXd& x, double tol) {
    if (zs.empty()) return false;
    const Eigen::Index n = x.size();
    Eigen::Index total_gens = 0;
    for (const Zonotope* z : zs) {
        if (z->dim() != n) throw std::invalid_argument("hull_contains: dimension mismatch");
        total_gens += z->order();
    }

    // Exact shortcuts before the LP: outside the joint bounding box, or inside
    // one member that is a box or has a square invertible generator matrix.
    for (Eigen::Index d = 0; d < n; ++d) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const Zonotope* z : zs) {
            const double r = z->generators.row(d).cwiseAbs().sum();
            lo = std::min(lo, z->center(d) - r);
            hi = std::max(hi, z->center(d) + r);
        }
        if (x(d) - hi > tol || lo - x(d) > tol) return false;
    }
    for (const Zonotope* z : zs) {
        if (z->order() != n) continue;
        if (const auto in_box = box_membership(*z, x)) {
            if (*in_box) return true;
            continue;
        }
        const Eigen::MatrixXd& G = z->generators;
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
        if (lu.isInvertible() && lu.solve(x - z->center).cwiseAbs().maxCoeff() <= 1.0) return true;
    }

    const auto J = static_cast<Eigen::Index>(zs.size());

    // Variables: per zonotope [lambda, p(m), q(m), u(m)], then s+(n), s-(n), v+(n), v-(n).
    const Eigen::Index nvar = J + 3 * total_gens + 4 * n;
    const Eigen::Index nrow = n + 1 + total_gens + 2 * n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nrow, nvar);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nrow);

    Eigen::Index col = 0;
    Eigen::Index gen_row = n + 1;
    for (Eigen::Index j = 0; j < J; ++j) {
        const Zonotope& z = *zs[static_cast<std::size_t>(j)];
        const Eigen::Index m = z.order();
        const Eigen::Index lam = col;
        A.block(0, lam, n, 1) = z.center;
        A(n, lam) = 1.0;
        const Eigen::Index p0 = lam + 1, q0 = p0 + m, u0 = q0 + m;
        for (Eigen::Index i = 0; i < m; ++i) {
            A.block(0, p0 + i, n, 1) = z.generators.col(i);
            A.block(0, q0 + i, n, 1) = -z.generators.col(i);
            A(gen_row, p0 + i) = 1.0;
            A(gen_row, q0 + i) = 1.0;
            A(gen_row, u0 + i) = 1.0;
            A(gen_row, lam) = -1.0;
            ++gen_row;
        }
        col = u0 + m;
    }
    const Eigen::Index sp = col, sm = sp + n, vp = sm + n, vm = vp + n;
    for (Eigen::Index d = 0; d < n; ++d) {
        A(d, sp + d) = 1.0;
        A(d, sm + d) = -1.0;
        b(d) = x(d);
        A(gen_row + d, sp + d) = 1.0;
        A(gen_row + d, vp + d) = 1.0;
        b(gen_row + d) = tol;
        A(gen_row + n + d, sm + d) = 1.0;
        A(gen_row + n + d, vm + d) = 1.0;
        b(gen_row + n + d) = tol;
    }
    b(n) = 1.0;
    return lp_feasible(A, b).feasible;
}

bool zonotope_contains(const Zonotope& z, const Eigen::VectorXd& x, double tol) {
    if (z.dim() != x.size()) throw std::invalid_argument("zonotope_contains: dimension mismatch");
    return hull_contains({&z}, x, tol);
}

double spectral_radius(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
    return Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

UnstableDynamics::UnstableDynamics(double rho)
    : std::invalid_argument("dynamics are not contractive: spectral radius " + std::to_string(rho) + " >= 1"), rho_(rho) {}

RpiResult compute_rpi(const Eigen::MatrixXd& A, const Zonotope& w, double tol, int max_iter, Eigen::Index max_generators) {
    if (A.rows() != w.dim() || A.cols() != w.dim()) throw std::invalid_argument("compute_rpi: dimension mismatch");
    const double rho = spectral_radius(A);
    if (!(rho < 1.0)) throw UnstableDynamics(rho);

    RpiResult out{reduce_order(w, max_generators), 0, false};
    // Size of the newest exact term A^i W of the series. The reduced iterate
    // can settle into a small limit cycle, so its own change is no stop test.
    Eigen::MatrixXd term_g = w.generators;
    Eigen::VectorXd term_c = w.center;
    while (out.iterations < max_iter) {
        out.set = reduce_order(minkowski_sum(linear_map(A, out.set), w), max_generators);
        ++out.iterations;
        term_g = A * term_g;
        term_c = A * term_c;
        const double increment = term_g.cwiseAbs().rowwise().sum().maxCoeff() + term_c.cwiseAbs().maxCoeff();
        if (increment < tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace regimekit
