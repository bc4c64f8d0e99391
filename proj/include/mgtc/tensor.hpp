#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mgtc {

using Matrix = Eigen::MatrixXd;
using Dims = std::vector<std::int64_t>;

// Product of dimensions with positivity and overflow checks.
std::int64_t element_count(const Dims& dims);

// Dense order-N real tensor.
//
// Linearization: mode 0 varies fastest, i.e. linear index of (i_0,...,i_{N-1})
// is i_0 + I_0*(i_1 + I_1*(i_2 + ...)). Consequently the mode-0 unfolding is a
// plain reinterpretation of the value buffer, and flattening leading modes
// (e.g. (W,W,I3) -> (W*W,I3)) is a metadata-only reshape.
class DenseTensor {
public:
    DenseTensor() = default;

    static DenseTensor zeros(Dims dims);
    static DenseTensor constant(Dims dims, double value);
    // Takes ownership of `values`; rejects size mismatch and non-finite entries.
    static DenseTensor from_values(Dims dims, std::vector<double> values);

    int order() const { return static_cast<int>(dims_.size()); }
    const Dims& dims() const { return dims_; }
    std::int64_t dim(int mode) const { return dims_[static_cast<std::size_t>(mode)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

    double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }
    double& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }

    double at(std::span<const std::int64_t> index) const { return values_[static_cast<std::size_t>(linear_index(index))]; }
    double& at(std::span<const std::int64_t> index) { return values_[static_cast<std::size_t>(linear_index(index))]; }

    std::int64_t linear_index(std::span<const std::int64_t> index) const;

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }

    // Metadata-only reshape; total element count must be preserved.
    DenseTensor reshaped(Dims new_dims) const;

    bool same_dims(const DenseTensor& other) const { return dims_ == other.dims_; }

private:
    Dims dims_;
    std::vector<double> values_;
};

// Throws if any entry is NaN/Inf. `what` names the offending value in the message.
void require_finite(const DenseTensor& t, const char* what);

// out mode a carries in mode perm[a]; perm must be a permutation of 0..N-1.
DenseTensor permute(const DenseTensor& t, std::span<const int> perm);

// Mode-k unfolding (Kolda-Bader): rows = I_k, columns run over the remaining
// modes in increasing order with earlier modes varying fastest.
Matrix unfold_mode(const DenseTensor& t, int mode);
DenseTensor fold_mode(const Matrix& m, int mode, const Dims& dims);

// Permute modes to (row_modes, col_modes), then reshape. Within each group the
// earlier-listed mode varies fastest. The two lists must partition 0..N-1.
Matrix generalized_unfold(const DenseTensor& t, std::span<const int> row_modes, std::span<const int> col_modes);
DenseTensor generalized_fold(const Matrix& m, std::span<const int> row_modes, std::span<const int> col_modes,
                             const Dims& dims);

// Sum over the paired modes; output modes are the remaining modes of `a`
// (in order) followed by the remaining modes of `b` (in order). A full
// contraction yields a dims-{1} tensor holding the scalar.
DenseTensor contract_pair(const DenseTensor& a, const DenseTensor& b,
                          std::span<const std::pair<int, int>> axes);

double frobenius_norm(const DenseTensor& t);

// ||a - b||_F / max(||b||_F, 1e-30)
double relative_change(const DenseTensor& a, const DenseTensor& b);

}  // namespace mgtc
