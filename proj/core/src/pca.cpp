#include "cosod/pca.hpp"

#include <string>

#include "cosod/error.hpp"

namespace cosod {

Eigen::MatrixXd PcaModel::project(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) {
        throw ShapeError("PCA projection expects " + std::to_string(mean.size()) + " columns, got " +
                         std::to_string(X.cols()));
    }
    return (X.rowwise() - mean.transpose()) * basis;
}

PcaResult reduce_pca(const Eigen::MatrixXd& X, int k) {
    const auto rows = X.rows();
    const auto dims = X.cols();
    if (rows < 2) {
        throw ShapeError("PCA needs at least 2 rows, got " + std::to_string(rows));
    }
    if (k < 1 || k > std::min<Eigen::Index>(rows - 1, dims)) {
        throw ShapeError("PCA target dimension " + std::to_string(k) + " outside [1, " +
                         std::to_string(std::min<Eigen::Index>(rows - 1, dims)) + "]");
    }

    PcaModel model;
    model.mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw BackendError("PCA eigendecomposition did not converge");
    }
    // Eigen returns ascending eigenvalues; take the last k in reverse.
    const Eigen::VectorXd& evals = solver.eigenvalues();
    const Eigen::MatrixXd& evecs = solver.eigenvectors();
    const double total = std::max(0.0, evals.sum());

    model.basis.resize(dims, k);
    model.explained_variance.resize(k);
    model.explained_variance_ratio.resize(k);
    for (int j = 0; j < k; ++j) {
        const Eigen::Index src = dims - 1 - j;
        Eigen::VectorXd col = evecs.col(src);
        Eigen::Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        if (col(arg) < 0.0) {
            col = -col;
        }
        model.basis.col(j) = col;
        const double var = std::max(0.0, evals(src));
        model.explained_variance(j) = var;
        model.explained_variance_ratio(j) = total > 0.0 ? var / total : 0.0;
    }

    PcaResult result;
    if (total > 0.0) {
        result.projections = centered * model.basis;
    } else {
        result.projections = Eigen::MatrixXd::Zero(rows, k);
    }
    result.model = std::move(model);
    return result;
}

} // namespace cosod
