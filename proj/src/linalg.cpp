#include "mgtc/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

namespace mgtc {

SvdResult svd(const Matrix& m) {
    if (!m.allFinite()) {
        throw std::invalid_argument("svd: non-finite entries in input");
    }
    Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("svd: decomposition did not converge for " + std::to_string(m.rows()) + "x" +
                                 std::to_string(m.cols()) + " matrix");
    }
    SvdResult result;
    result.u = solver.matrixU();
    result.singular_values = solver.singularValues();
    result.vt = solver.matrixV().transpose();
    return result;
}

Matrix svt(const Matrix& m, std::span<const double> thresholds) {
    const Eigen::Index k = std::min(m.rows(), m.cols());
    if (thresholds.size() != 1 && thresholds.size() != static_cast<std::size_t>(k)) {
        throw std::invalid_argument("svt: need 1 or min(rows,cols) thresholds, got " +
                                    std::to_string(thresholds.size()));
    }
    for (double tau : thresholds) {
        if (!(tau >= 0.0)) {
            throw std::invalid_argument("svt: thresholds must be non-negative");
        }
    }
    SvdResult s = svd(m);
    Eigen::VectorXd shrunk = s.singular_values;
    for (Eigen::Index i = 0; i < shrunk.size(); ++i) {
        const double tau = thresholds[thresholds.size() == 1 ? 0 : static_cast<std::size_t>(i)];
        shrunk[i] = std::max(shrunk[i] - tau, 0.0);
    }
    return s.u * shrunk.asDiagonal() * s.vt;
}

Matrix svt(const Matrix& m, double threshold) {
    return svt(m, std::span<const double>(&threshold, 1));
}

}  // namespace mgtc
