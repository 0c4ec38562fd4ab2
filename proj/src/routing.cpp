#include "edfnet/routing.hpp"

#include "edfnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace edfnet {

namespace {

Eigen::MatrixXd from_rows(const std::vector<std::vector<double>>& rows) {
    const auto K = static_cast<Eigen::Index>(rows.size());
    if (K == 0) throw ConfigError("routing matrix: K must be at least 1");
    Eigen::MatrixXd P(K, K);
    for (Eigen::Index i = 0; i < K; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != K) {
            throw ConfigError("routing matrix: row " + std::to_string(i) + " has wrong length");
        }
        for (Eigen::Index j = 0; j < K; ++j) P(i, j) = rows[i][j];
    }
    return P;
}

}  // namespace

RoutingMatrix::RoutingMatrix(const std::vector<std::vector<double>>& P) : P_(from_rows(P)) {
    certify();
}

RoutingMatrix::RoutingMatrix(const Eigen::MatrixXd& P) : P_(P) {
    if (P_.rows() != P_.cols() || P_.rows() == 0) {
        throw ConfigError("routing matrix: must be square and nonempty");
    }
    certify();
}

RoutingMatrix RoutingMatrix::zero(int K) { return RoutingMatrix(Eigen::MatrixXd::Zero(K, K)); }

void RoutingMatrix::certify() {
    const Eigen::Index K = P_.rows();
    for (Eigen::Index i = 0; i < K; ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < K; ++j) {
            if (!std::isfinite(P_(i, j)) || P_(i, j) < 0.0) {
                std::ostringstream msg;
                msg << "routing matrix: entry P[" << i << "][" << j << "] must be a nonnegative number";
                throw ConfigError(msg.str());
            }
            row += P_(i, j);
        }
        if (row > 1.0 + 1e-12) {
            std::ostringstream msg;
            msg << "routing matrix: substochastic violated, row " << i << " sums to " << row;
            throw ConfigError(msg.str());
        }
    }

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K, K);
    R_ = I - P_.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(R_);
    if (!lu.isInvertible()) {
        throw ConfigError("routing matrix: not convergent, I - P^T is singular");
    }
    r_inverse_ = lu.inverse();
    // Nonnegative inverse of I - G (G >= 0) certifies rho(G) < 1.
    if (r_inverse_.minCoeff() < -1e-10 || !r_inverse_.allFinite()) {
        throw ConfigError("routing matrix: not convergent, (I - P^T)^{-1} has negative entries");
    }
    r_inverse_ = r_inverse_.cwiseMax(0.0);

    // rho(G) = 1 - 1/rho((I-G)^{-1}) <= 1 - 1/||(I-G)^{-1}||, and
    // rho(G) <= ||G^n||^{1/n} for every n.
    const double inv_norm = r_inverse_.cwiseAbs().rowwise().sum().maxCoeff();
    rho_bound_ = 1.0 - 1.0 / inv_norm;
    Eigen::MatrixXd power = P_.transpose();
    for (int n = 1; n <= 64; n *= 2) {
        const double norm = power.cwiseAbs().rowwise().sum().maxCoeff();
        rho_bound_ = std::min(rho_bound_, std::pow(norm, 1.0 / n));
        power = power * power;
    }
    rho_bound_ = std::max(rho_bound_, 0.0);
    if (!(rho_bound_ < 1.0 - 1e-12)) {
        throw ConfigError("routing matrix: not convergent, spectral radius bound is not below 1");
    }

    const double r_norm = R_.cwiseAbs().rowwise().sum().maxCoeff();
    lipschitz_ = std::max(inv_norm, 1.0 + r_norm * inv_norm);
}

double RoutingMatrix::exit_probability(int i) const {
    return std::max(0.0, 1.0 - P_.row(i).sum());
}

bool RoutingMatrix::has_probabilistic_row() const {
    for (Eigen::Index i = 0; i < P_.rows(); ++i) {
        int outcomes = exit_probability(static_cast<int>(i)) > 0.0 ? 1 : 0;
        for (Eigen::Index j = 0; j < P_.cols(); ++j) outcomes += P_(i, j) > 0.0 ? 1 : 0;
        if (outcomes > 1) return true;
    }
    return false;
}

std::vector<std::vector<double>> RoutingMatrix::to_rows() const {
    std::vector<std::vector<double>> rows(P_.rows(), std::vector<double>(P_.cols()));
    for (Eigen::Index i = 0; i < P_.rows(); ++i) {
        for (Eigen::Index j = 0; j < P_.cols(); ++j) rows[i][j] = P_(i, j);
    }
    return rows;
}

}  // namespace edfnet
