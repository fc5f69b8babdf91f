#include "regimekit/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace regimekit {

LpFeasibility lp_feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double feas_tol) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    if (b.size() != m) throw std::invalid_argument("lp_feasible: row count mismatch");

    // Columns: n structural, m artificial, then RHS. Last row holds reduced costs.
    using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Tableau T = Tableau::Zero(m + 1, n + m + 1);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    const double scale = std::max(1.0, std::max(A.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
    for (Eigen::Index i = 0; i < m; ++i) {
        const double sign = b(i) < 0.0 ? -1.0 : 1.0;
        T.row(i).head(n) = sign * A.row(i);
        T(i, n + i) = 1.0;
        T(i, n + m) = sign * b(i);
        basis[static_cast<std::size_t>(i)] = n + i;
    }
    // Objective: minimize sum of artificials. Row m stores sum over constraint rows.
    for (Eigen::Index i = 0; i < m; ++i) {
        T.row(m).head(n) += T.row(i).head(n);
        T(m, n + m) += T(i, n + m);
    }

    const double piv_eps = 1e-12 * scale;
    LpFeasibility out;
    const int max_pivots = 50 * static_cast<int>(n + m) + 100;
    while (out.pivots < max_pivots) {
        if (T(m, n + m) <= feas_tol * scale) break;  // already feasible
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < n + m; ++j) {
            if (T(m, j) > piv_eps) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;

        Eigen::Index leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m; ++i) {
            if (T(i, enter) <= piv_eps) continue;
            const double ratio = T(i, n + m) / T(i, enter);
            if (ratio < best_ratio - 1e-15 ||
                (std::abs(ratio - best_ratio) <= 1e-15 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                best_ratio = ratio;
                leave = i;
            }
        }
        if (leave < 0) break;  // unbounded direction; cannot happen for the phase-one objective

        T.row(leave) /= T(leave, enter);
        for (Eigen::Index i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double f = T(i, enter);
            if (f != 0.0) T.row(i) -= f * T.row(leave);
        }
        basis[static_cast<std::size_t>(leave)] = enter;
        ++out.pivots;
    }

    out.infeasibility = std::max(0.0, T(m, n + m));
    out.feasible = out.infeasibility <= feas_tol * scale;
    out.z = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index col = basis[static_cast<std::size_t>(i)];
        if (col < n) out.z(col) = T(i, n + m);
    }
    return out;
}

}  // namespace regimekit
