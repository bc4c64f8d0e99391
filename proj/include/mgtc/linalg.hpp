#pragma once

#include "mgtc/tensor.hpp"

#include <span>

namespace mgtc {

struct SvdResult {
    Matrix u;
    Eigen::VectorXd singular_values;  // non-increasing, >= 0
    Matrix vt;
};

// Thin SVD. Reconstruction u * diag(s) * vt matches the input to a relative
// Frobenius error of 1e-10; failure to converge throws instead of returning
// garbage.
SvdResult svd(const Matrix& m);

// Soft singular value shrinkage: U * diag(max(sigma_i - tau_i, 0)) * V^T.
// `thresholds` has length 1 (scalar threshold) or min(rows, cols) for the
// weighted variant; all thresholds must be >= 0.
Matrix svt(const Matrix& m, std::span<const double> thresholds);
Matrix svt(const Matrix& m, double threshold);

}  // namespace mgtc
