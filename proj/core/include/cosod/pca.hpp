#pragma once

#include <Eigen/Dense>

namespace cosod {

struct PcaModel {
    Eigen::VectorXd mean;                     // D
    Eigen::MatrixXd basis;                    // D x k, orthonormal columns
    Eigen::VectorXd explained_variance;       // k, non-increasing
    Eigen::VectorXd explained_variance_ratio; // k, fraction of total variance

    /// Centers rows of X (P x D) and projects onto the basis.
    Eigen::MatrixXd project(const Eigen::MatrixXd& X) const;
};

struct PcaResult {
    Eigen::MatrixXd projections; // P x k
    PcaModel model;
};

/// PCA of the rows of X (P x D) keeping the top `k` directions.
///
/// Requires P >= 2 and 1 <= k <= min(P - 1, D). Each basis column is flipped
/// so that its largest-magnitude entry is positive. Zero-variance input
/// yields zero projections.
PcaResult reduce_pca(const Eigen::MatrixXd& X, int k);

} // namespace cosod
