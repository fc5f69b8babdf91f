#pragma once

#include <Eigen/Dense>

namespace regimekit {

/// Phase-one simplex: is { z >= 0 : A z = b } non-empty?
/// Dense tableau with Bland's rule; meant for the small programs built by
/// the zonotope queries, not for general use.
struct LpFeasibility {
    bool feasible = false;
    double infeasibility = 0.0;  // optimal sum of artificial variables
    Eigen::VectorXd z;           // a feasible point when feasible
    int pivots = 0;
};

LpFeasibility lp_feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double feas_tol = 1e-9);

}  // namespace regimekit
