#include "mgtc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mgtc {

namespace {

std::string dims_to_string(const Dims& dims) {
    std::ostringstream out;
    out << "(";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i > 0) out << ",";
        out << dims[i];
    }
    out << ")";
    return out.str();
}

std::vector<std::int64_t> strides_of(const Dims& dims) {
    std::vector<std::int64_t> strides(dims.size());
    std::int64_t s = 1;
    for (std::size_t m = 0; m < dims.size(); ++m) {
        strides[m] = s;
        s *= dims[m];
    }
    return strides;
}

void check_mode(int mode, int order) {
    if (mode < 0 || mode >= order) {
        throw std::invalid_argument("mode index " + std::to_string(mode) + " out of range for order " +
                                    std::to_string(order));
    }
}

// Validates that row_modes ++ col_modes forms a permutation of 0..N-1.
std::vector<int> join_partition(std::span<const int> row_modes, std::span<const int> col_modes, int order) {
    std::vector<int> perm;
    perm.reserve(static_cast<std::size_t>(order));
    perm.insert(perm.end(), row_modes.begin(), row_modes.end());
    perm.insert(perm.end(), col_modes.begin(), col_modes.end());
    if (static_cast<int>(perm.size()) != order) {
        throw std::invalid_argument("mode lists do not cover tensor order " + std::to_string(order));
    }
    std::vector<bool> seen(static_cast<std::size_t>(order), false);
    for (int m : perm) {
        check_mode(m, order);
        if (seen[static_cast<std::size_t>(m)]) {
            throw std::invalid_argument("mode " + std::to_string(m) + " listed twice in mode bipartition");
        }
        seen[static_cast<std::size_t>(m)] = true;
    }
    return perm;
}

}  // namespace

std::int64_t element_count(const Dims& dims) {
    if (dims.empty()) throw std::invalid_argument("tensor order must be >= 1");
    std::int64_t total = 1;
    for (std::int64_t d : dims) {
        if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive, got " + dims_to_string(dims));
        if (total > (std::int64_t{1} << 62) / d) {
            throw std::invalid_argument("tensor size overflow for dims " + dims_to_string(dims));
        }
        total *= d;
    }
    return total;
}

DenseTensor DenseTensor::zeros(Dims dims) {
    return constant(std::move(dims), 0.0);
}

DenseTensor DenseTensor::constant(Dims dims, double value) {
    DenseTensor t;
    std::int64_t total = element_count(dims);
    t.dims_ = std::move(dims);
    t.values_.assign(static_cast<std::size_t>(total), value);
    return t;
}

DenseTensor DenseTensor::from_values(Dims dims, std::vector<double> values) {
    std::int64_t total = element_count(dims);
    if (total != static_cast<std::int64_t>(values.size())) {
        throw std::invalid_argument("value count " + std::to_string(values.size()) + " does not match dims " +
                                    dims_to_string(dims));
    }
    DenseTensor t;
    t.dims_ = std::move(dims);
    t.values_ = std::move(values);
    require_finite(t, "tensor values");
    return t;
}

std::int64_t DenseTensor::linear_index(std::span<const std::int64_t> index) const {
    if (static_cast<int>(index.size()) != order()) {
        throw std::invalid_argument("index order mismatch");
    }
    std::int64_t linear = 0;
    std::int64_t stride = 1;
    for (std::size_t m = 0; m < dims_.size(); ++m) {
        if (index[m] < 0 || index[m] >= dims_[m]) {
            throw std::out_of_range("tensor index out of range at mode " + std::to_string(m));
        }
        linear += index[m] * stride;
        stride *= dims_[m];
    }
    return linear;
}

DenseTensor DenseTensor::reshaped(Dims new_dims) const {
    std::int64_t total = element_count(new_dims);
    if (total != size()) {
        throw std::invalid_argument("reshape from " + dims_to_string(dims_) + " to " + dims_to_string(new_dims) +
                                    " changes element count");
    }
    DenseTensor t;
    t.dims_ = std::move(new_dims);
    t.values_ = values_;
    return t;
}

void require_finite(const DenseTensor& t, const char* what) {
    for (double v : t.values()) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + ": non-finite entry");
        }
    }
}

DenseTensor permute(const DenseTensor& t, std::span<const int> perm) {
    const int order = t.order();
    if (static_cast<int>(perm.size()) != order) {
        throw std::invalid_argument("permutation length mismatch");
    }
    std::vector<bool> seen(static_cast<std::size_t>(order), false);
    Dims out_dims(static_cast<std::size_t>(order));
    for (int a = 0; a < order; ++a) {
        check_mode(perm[static_cast<std::size_t>(a)], order);
        if (seen[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])]) {
            throw std::invalid_argument("permutation repeats a mode");
        }
        seen[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])] = true;
        out_dims[static_cast<std::size_t>(a)] = t.dim(perm[static_cast<std::size_t>(a)]);
    }

    DenseTensor out = DenseTensor::zeros(out_dims);
    const auto in_strides = strides_of(t.dims());

    // Odometer walk over the output in linear order; in_pos tracks the
    // matching input position via the permuted strides.
    std::vector<std::int64_t> counter(static_cast<std::size_t>(order), 0);
    std::vector<std::int64_t> step(static_cast<std::size_t>(order));
    for (int a = 0; a < order; ++a) {
        step[static_cast<std::size_t>(a)] = in_strides[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])];
    }
    std::int64_t in_pos = 0;
    const std::int64_t total = out.size();
    for (std::int64_t linear = 0; linear < total; ++linear) {
        out[linear] = t[in_pos];
        for (int a = 0; a < order; ++a) {
            counter[static_cast<std::size_t>(a)]++;
            in_pos += step[static_cast<std::size_t>(a)];
            if (counter[static_cast<std::size_t>(a)] < out_dims[static_cast<std::size_t>(a)]) break;
            in_pos -= step[static_cast<std::size_t>(a)] * out_dims[static_cast<std::size_t>(a)];
            counter[static_cast<std::size_t>(a)] = 0;
        }
    }
    return out;
}

Matrix unfold_mode(const DenseTensor& t, int mode) {
    check_mode(mode, t.order());
    std::vector<int> rows{mode};
    std::vector<int> cols;
    for (int m = 0; m < t.order(); ++m) {
        if (m != mode) cols.push_back(m);
    }
    return generalized_unfold(t, rows, cols);
}

DenseTensor fold_mode(const Matrix& m, int mode, const Dims& dims) {
    check_mode(mode, static_cast<int>(dims.size()));
    std::vector<int> rows{mode};
    std::vector<int> cols;
    for (int k = 0; k < static_cast<int>(dims.size()); ++k) {
        if (k != mode) cols.push_back(k);
    }
    return generalized_fold(m, rows, cols, dims);
}

Matrix generalized_unfold(const DenseTensor& t, std::span<const int> row_modes, std::span<const int> col_modes) {
    const std::vector<int> perm = join_partition(row_modes, col_modes, t.order());
    DenseTensor p = permute(t, perm);
    std::int64_t rows = 1;
    for (int m : row_modes) rows *= t.dim(m);
    const std::int64_t cols = p.size() / rows;
    // Column-major matrix layout coincides with the permuted linearization.
    Matrix out(rows, cols);
    std::memcpy(out.data(), p.data(), static_cast<std::size_t>(p.size()) * sizeof(double));
    return out;
}

DenseTensor generalized_fold(const Matrix& m, std::span<const int> row_modes, std::span<const int> col_modes,
                             const Dims& dims) {
    const int order = static_cast<int>(dims.size());
    const std::vector<int> perm = join_partition(row_modes, col_modes, order);
    const std::int64_t total = element_count(dims);
    if (m.rows() * m.cols() != total) {
        throw std::invalid_argument("matrix size " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                    " does not match dims " + dims_to_string(dims));
    }
    std::int64_t rows = 1;
    Dims perm_dims(static_cast<std::size_t>(order));
    for (int a = 0; a < order; ++a) {
        perm_dims[static_cast<std::size_t>(a)] = dims[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])];
    }
    for (int r : row_modes) rows *= dims[static_cast<std::size_t>(r)];
    if (m.rows() != rows) {
        throw std::invalid_argument("matrix row count " + std::to_string(m.rows()) +
                                    " does not match row-mode product " + std::to_string(rows));
    }

    DenseTensor p = DenseTensor::zeros(perm_dims);
    std::memcpy(p.data(), m.data(), static_cast<std::size_t>(p.size()) * sizeof(double));

    std::vector<int> inverse(static_cast<std::size_t>(order));
    for (int a = 0; a < order; ++a) {
        inverse[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])] = a;
    }
    return permute(p, inverse);
}

DenseTensor contract_pair(const DenseTensor& a, const DenseTensor& b,
                          std::span<const std::pair<int, int>> axes) {
    std::vector<bool> used_a(static_cast<std::size_t>(a.order()), false);
    std::vector<bool> used_b(static_cast<std::size_t>(b.order()), false);
    std::vector<int> contr_a, contr_b;
    for (const auto& [ma, mb] : axes) {
        check_mode(ma, a.order());
        check_mode(mb, b.order());
        if (used_a[static_cast<std::size_t>(ma)] || used_b[static_cast<std::size_t>(mb)]) {
            throw std::invalid_argument("contraction axis listed twice");
        }
        if (a.dim(ma) != b.dim(mb)) {
            throw std::invalid_argument("contracted mode length mismatch: " + std::to_string(a.dim(ma)) + " vs " +
                                        std::to_string(b.dim(mb)));
        }
        used_a[static_cast<std::size_t>(ma)] = true;
        used_b[static_cast<std::size_t>(mb)] = true;
        contr_a.push_back(ma);
        contr_b.push_back(mb);
    }

    std::vector<int> free_a, free_b;
    Dims out_dims;
    for (int m = 0; m < a.order(); ++m) {
        if (!used_a[static_cast<std::size_t>(m)]) {
            free_a.push_back(m);
            out_dims.push_back(a.dim(m));
        }
    }
    for (int m = 0; m < b.order(); ++m) {
        if (!used_b[static_cast<std::size_t>(m)]) {
            free_b.push_back(m);
            out_dims.push_back(b.dim(m));
        }
    }

    const Matrix ma = generalized_unfold(a, free_a, contr_a);
    const Matrix mb = generalized_unfold(b, contr_b, free_b);
    const Matrix prod = ma * mb;

    if (out_dims.empty()) {
        // Full contraction: carry the scalar in a dims-{1} tensor.
        return DenseTensor::from_values({1}, {prod(0, 0)});
    }
    std::vector<int> rows(free_a.size()), cols(free_b.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), static_cast<int>(free_a.size()));
    return generalized_fold(prod, rows, cols, out_dims);
}

double frobenius_norm(const DenseTensor& t) {
    double sum = 0.0;
    for (double v : t.values()) sum += v * v;
    return std::sqrt(sum);
}

double relative_change(const DenseTensor& a, const DenseTensor& b) {
    if (!a.same_dims(b)) {
        throw std::invalid_argument("relative_change: dimension mismatch");
    }
    double diff = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        diff += d * d;
    }
    return std::sqrt(diff) / std::max(frobenius_norm(b), 1e-30);
}

}  // namespace mgtc
