#pragma once

#include <Eigen/Dense>

#include <vector>

namespace edfnet {

/// Substochastic, convergent routing matrix P and the reflection matrix
/// R = I - P^T derived from it.
///
/// Construction certifies convergence: (I - P^T) must be invertible with a
/// nonnegative inverse, which for nonnegative P holds iff rho(P) < 1.
class RoutingMatrix {
public:
    /// Single node without feedback.
    RoutingMatrix() : RoutingMatrix(Eigen::MatrixXd::Zero(1, 1)) {}
    /// Throws ConfigError naming the violated property.
    explicit RoutingMatrix(const std::vector<std::vector<double>>& P);
    explicit RoutingMatrix(const Eigen::MatrixXd& P);

    static RoutingMatrix zero(int K);

    int size() const noexcept { return static_cast<int>(P_.rows()); }
    double p(int i, int j) const { return P_(i, j); }
    const Eigen::MatrixXd& P() const noexcept { return P_; }
    const Eigen::MatrixXd& R() const noexcept { return R_; }
    /// (I - P^T)^{-1}, entrywise nonnegative.
    const Eigen::MatrixXd& r_inverse() const noexcept { return r_inverse_; }

    /// Certified upper bound on the spectral radius of P, strictly below 1.
    double spectral_radius_bound() const noexcept { return rho_bound_; }

    /// Lipschitz constant of both reflection maps in the sup norm:
    /// max(L_y, L_z) with L_y = max row sum of (I - P^T)^{-1} and
    /// L_z = 1 + ||R||_inf * L_y.
    double lipschitz_bound() const noexcept { return lipschitz_; }

    /// Probability that a job leaving node i exits the network.
    double exit_probability(int i) const;

    bool is_zero() const noexcept { return P_.isZero(0.0); }
    /// True when some row routes to more than one destination with positive
    /// probability or splits between a node and the exit.
    bool has_probabilistic_row() const;

    std::vector<std::vector<double>> to_rows() const;

private:
    void certify();

    Eigen::MatrixXd P_;
    Eigen::MatrixXd R_;
    Eigen::MatrixXd r_inverse_;
    double rho_bound_ = 0.0;
    double lipschitz_ = 1.0;
};

}  // namespace edfnet
