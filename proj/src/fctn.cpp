#include "mgtc/fctn.hpp"

#include "mgtc/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace mgtc {

FctnRankTable::FctnRankTable(int order) : order_(order) {
    if (order < 2) throw std::invalid_argument("fctn: order must be >= 2");
    table_.assign(static_cast<std::size_t>(order) * static_cast<std::size_t>(order), 1);
}

FctnRankTable FctnRankTable::uniform(int order, std::int64_t rank) {
    FctnRankTable t(order);
    for (int i = 0; i < order; ++i) {
        for (int j = i + 1; j < order; ++j) {
            t.set_rank(i, j, rank);
        }
    }
    return t;
}

std::int64_t FctnRankTable::rank(int i, int j) const {
    if (i == j || i < 0 || j < 0 || i >= order_ || j >= order_) {
        throw std::invalid_argument("fctn rank index out of range");
    }
    return table_[static_cast<std::size_t>(i) * static_cast<std::size_t>(order_) + static_cast<std::size_t>(j)];
}

void FctnRankTable::set_rank(int i, int j, std::int64_t rank) {
    if (i == j || i < 0 || j < 0 || i >= order_ || j >= order_) {
        throw std::invalid_argument("fctn rank index out of range");
    }
    if (rank < 1) throw std::invalid_argument("fctn ranks must be >= 1");
    table_[static_cast<std::size_t>(i) * static_cast<std::size_t>(order_) + static_cast<std::size_t>(j)] = rank;
    table_[static_cast<std::size_t>(j) * static_cast<std::size_t>(order_) + static_cast<std::size_t>(i)] = rank;
}

Dims fctn_factor_dims(const FctnRankTable& ranks, const Dims& dims, int k) {
    const int order = static_cast<int>(dims.size());
    if (ranks.order() != order) {
        throw std::invalid_argument("fctn: rank table order " + std::to_string(ranks.order()) +
                                    " does not match tensor order " + std::to_string(order));
    }
    if (k < 0 || k >= order) throw std::invalid_argument("fctn: factor index out of range");
    Dims fd(static_cast<std::size_t>(order));
    for (int j = 0; j < order; ++j) {
        fd[static_cast<std::size_t>(j)] = (j == k) ? dims[static_cast<std::size_t>(k)] : ranks.rank(j, k);
    }
    return fd;
}

void FctnFactorSet::validate() const {
    const int order = static_cast<int>(dims.size());
    if (static_cast<int>(factors.size()) != order) {
        throw std::invalid_argument("fctn: factor count does not match tensor order");
    }
    for (int k = 0; k < order; ++k) {
        const Dims expected = fctn_factor_dims(ranks, dims, k);
        if (factors[static_cast<std::size_t>(k)].dims() != expected) {
            throw std::invalid_argument("fctn: factor " + std::to_string(k) + " has inconsistent mode sizes");
        }
    }
}

void FctnConfig::validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("fctn: rho must be positive");
    if (max_iters < 1) throw std::invalid_argument("fctn: max_iters must be >= 1");
    if (init_scale && !(*init_scale >= 0.0)) throw std::invalid_argument("fctn: init_scale must be >= 0");
}

FctnFactorSet fctn_init(const Dims& dims, const FctnConfig& config) {
    config.validate();
    const int order = static_cast<int>(dims.size());
    FctnFactorSet set;
    set.ranks = config.ranks;
    set.dims = dims;
    set.factors.reserve(static_cast<std::size_t>(order));
    SeededRng rng(config.init_seed);
    for (int k = 0; k < order; ++k) {
        const Dims fd = fctn_factor_dims(config.ranks, dims, k);
        double scale;
        if (config.init_scale) {
            scale = *config.init_scale;
        } else {
            std::int64_t rank_product = 1;
            for (int j = 0; j < order; ++j) {
                if (j != k) rank_product *= fd[static_cast<std::size_t>(j)];
            }
            scale = 1.0 / std::sqrt(static_cast<double>(rank_product));
        }
        DenseTensor g = DenseTensor::zeros(fd);
        for (std::int64_t i = 0; i < g.size(); ++i) {
            g[i] = scale * rng.normal();
        }
        set.factors.push_back(std::move(g));
    }
    set.validate();
    return set;
}

namespace {

// Mode bookkeeping for sequential network contraction.
struct ModeLabel {
    bool physical = false;
    int a = 0;  // physical: factor index; rank: smaller endpoint
    int b = 0;  // rank: larger endpoint
};

std::vector<ModeLabel> factor_labels(int order, int k) {
    std::vector<ModeLabel> labels(static_cast<std::size_t>(order));
    for (int j = 0; j < order; ++j) {
        if (j == k) {
            labels[static_cast<std::size_t>(j)] = {true, k, k};
        } else {
            labels[static_cast<std::size_t>(j)] = {false, std::min(j, k), std::max(j, k)};
        }
    }
    return labels;
}

struct LabeledTensor {
    DenseTensor t;
    std::vector<ModeLabel> labels;
};

// Contracts the factors listed in `subset` (strictly increasing) over every
// rank edge internal to the subset. Edges to factors outside the subset stay
// as dangling modes.
LabeledTensor contract_subset(const FctnFactorSet& set, const std::vector<int>& subset) {
    const int order = static_cast<int>(set.dims.size());
    LabeledTensor acc;
    acc.t = set.factors[static_cast<std::size_t>(subset.front())];
    acc.labels = factor_labels(order, subset.front());

    for (std::size_t s = 1; s < subset.size(); ++s) {
        const int f = subset[s];
        std::vector<std::pair<int, int>> axes;
        for (int pos = 0; pos < static_cast<int>(acc.labels.size()); ++pos) {
            const ModeLabel& label = acc.labels[static_cast<std::size_t>(pos)];
            if (!label.physical && label.b == f) {
                axes.emplace_back(pos, label.a);  // edge (a, f) sits at mode a of G_f
            }
        }
        std::vector<ModeLabel> next_labels;
        for (int pos = 0; pos < static_cast<int>(acc.labels.size()); ++pos) {
            const ModeLabel& label = acc.labels[static_cast<std::size_t>(pos)];
            if (label.physical || label.b != f) next_labels.push_back(label);
        }
        const std::vector<ModeLabel> f_labels = factor_labels(order, f);
        std::vector<bool> contracted(static_cast<std::size_t>(order), false);
        for (const auto& [apos, gpos] : axes) contracted[static_cast<std::size_t>(gpos)] = true;
        for (int pos = 0; pos < order; ++pos) {
            if (!contracted[static_cast<std::size_t>(pos)]) {
                next_labels.push_back(f_labels[static_cast<std::size_t>(pos)]);
            }
        }
        acc.t = contract_pair(acc.t, set.factors[static_cast<std::size_t>(f)], axes);
        acc.labels = std::move(next_labels);
    }
    return acc;
}

// Permutation sending the accumulated modes into `target` label order.
std::vector<int> label_permutation(const std::vector<ModeLabel>& current, const std::vector<ModeLabel>& target) {
    auto equal = [](const ModeLabel& x, const ModeLabel& y) {
        return x.physical == y.physical && x.a == y.a && x.b == y.b;
    };
    std::vector<int> perm;
    perm.reserve(target.size());
    for (const ModeLabel& want : target) {
        auto it = std::find_if(current.begin(), current.end(),
                               [&](const ModeLabel& have) { return equal(have, want); });
        if (it == current.end()) {
            throw std::logic_error("fctn: internal mode bookkeeping mismatch");
        }
        perm.push_back(static_cast<int>(it - current.begin()));
    }
    return perm;
}

bool is_identity(const std::vector<int>& perm) {
    for (int i = 0; i < static_cast<int>(perm.size()); ++i) {
        if (perm[static_cast<std::size_t>(i)] != i) return false;
    }
    return true;
}

}  // namespace

DenseTensor fctn_contract(const FctnFactorSet& set) {
    set.validate();
    const int order = static_cast<int>(set.dims.size());
    std::vector<int> subset(static_cast<std::size_t>(order));
    for (int k = 0; k < order; ++k) subset[static_cast<std::size_t>(k)] = k;
    LabeledTensor acc = contract_subset(set, subset);

    std::vector<ModeLabel> target(static_cast<std::size_t>(order));
    for (int k = 0; k < order; ++k) target[static_cast<std::size_t>(k)] = {true, k, k};
    const std::vector<int> perm = label_permutation(acc.labels, target);
    return is_identity(perm) ? std::move(acc.t) : permute(acc.t, perm);
}

LeaveOneOutModes leave_one_out_modes(int order, int k) {
    if (k < 0 || k >= order) throw std::invalid_argument("fctn: factor index out of range");
    LeaveOneOutModes modes;
    int pos = 0;
    for (int j = 0; j < order; ++j) {
        if (j == k) continue;
        if (j < k) {
            modes.physical_modes.push_back(pos);
            modes.rank_modes.push_back(pos + 1);
        } else {
            modes.rank_modes.push_back(pos);
            modes.physical_modes.push_back(pos + 1);
        }
        pos += 2;
    }
    return modes;
}

DenseTensor compose_leave_one_out(const FctnFactorSet& set, int k) {
    set.validate();
    const int order = static_cast<int>(set.dims.size());
    if (k < 0 || k >= order) throw std::invalid_argument("fctn: factor index out of range");
    if (order < 2) throw std::invalid_argument("fctn: order must be >= 2");

    std::vector<int> subset;
    for (int j = 0; j < order; ++j) {
        if (j != k) subset.push_back(j);
    }
    LabeledTensor acc = contract_subset(set, subset);

    std::vector<ModeLabel> target;
    for (int j : subset) {
        const ModeLabel phys{true, j, j};
        const ModeLabel rank{false, std::min(j, k), std::max(j, k)};
        if (j < k) {
            target.push_back(phys);
            target.push_back(rank);
        } else {
            target.push_back(rank);
            target.push_back(phys);
        }
    }
    const std::vector<int> perm = label_permutation(acc.labels, target);
    return is_identity(perm) ? std::move(acc.t) : permute(acc.t, perm);
}

double fctn_fit_objective(const DenseTensor& x, const FctnFactorSet& factors) {
    const DenseTensor fc = fctn_contract(factors);
    double sum = 0.0;
    for (std::int64_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - fc[i];
        sum += d * d;
    }
    return 0.5 * sum;
}

PamStepResult pam_step(const DenseTensor& x, const FctnFactorSet& factors, const DenseTensor& t,
                       const ObservationMask& mask, const FctnConfig& config) {
    config.validate();
    factors.validate();
    if (x.dims() != factors.dims || x.dims() != t.dims() || x.dims() != mask.dims()) {
        throw std::invalid_argument("pam_step: dimension mismatch");
    }
    const int order = x.order();
    const double rho = config.rho;

    PamStepResult result;
    result.factors = factors;

    for (int k = 0; k < order; ++k) {
        const DenseTensor m = compose_leave_one_out(result.factors, k);
        const LeaveOneOutModes modes = leave_one_out_modes(order, k);
        const Matrix m_rank_by_phys = generalized_unfold(m, modes.rank_modes, modes.physical_modes);

        const Matrix x_k = unfold_mode(x, k);
        const Matrix g_k = unfold_mode(result.factors.factors[static_cast<std::size_t>(k)], k);

        const Matrix numerator = x_k * m_rank_by_phys.transpose() + rho * g_k;
        Matrix gram = m_rank_by_phys * m_rank_by_phys.transpose();
        gram.diagonal().array() += rho;

        const Eigen::LLT<Matrix> llt(gram);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("pam_step: ridge system not positive definite at factor " + std::to_string(k));
        }
        const Matrix updated = llt.solve(numerator.transpose()).transpose();
        result.factors.factors[static_cast<std::size_t>(k)] =
            fold_mode(updated, k, result.factors.factors[static_cast<std::size_t>(k)].dims());
    }

    const DenseTensor fc = fctn_contract(result.factors);
    DenseTensor blended = DenseTensor::zeros(x.dims());
    const double inv = 1.0 / (1.0 + rho);
    for (std::int64_t i = 0; i < blended.size(); ++i) {
        blended[i] = (fc[i] + rho * x[i]) * inv;
    }
    result.x = project_observed(blended, t, mask);
    return result;
}

namespace {

FctnResult run_fctn(const DenseTensor& t, const ObservationMask& mask, const FctnConfig& config,
                    const DenseTensor* warm_start) {
    config.validate();
    if (t.dims() != mask.dims()) throw std::invalid_argument("fctn_complete: dimension mismatch");
    if (t.order() < 3) throw std::invalid_argument("fctn_complete: tensor order must be >= 3");
    if (mask.observed_count() == 0) throw std::invalid_argument("fctn_complete: empty observation mask");
    require_finite(t, "fctn_complete input");

    FctnResult result;
    DenseTensor x;
    if (warm_start != nullptr) {
        if (!warm_start->same_dims(t)) throw std::invalid_argument("fctn_complete: warm start dimension mismatch");
        require_finite(*warm_start, "fctn_complete warm start");
        x = project_observed(*warm_start, t, mask);
    } else {
        x = apply_mask(t, mask);
    }
    FctnFactorSet factors = fctn_init(t.dims(), config);

    for (int it = 0; it < config.max_iters; ++it) {
        PamStepResult step = pam_step(x, factors, t, mask, config);
        const double change = relative_change(step.x, x);
        result.rel_change_series.push_back(change);
        x = std::move(step.x);
        factors = std::move(step.factors);
        result.iterations = it + 1;
        result.final_rel_change = change;
        if (change < config.tol) break;
    }
    result.x = std::move(x);
    result.factors = std::move(factors);
    return result;
}

}  // namespace

FctnResult fctn_complete(const DenseTensor& t, const ObservationMask& mask, const FctnConfig& config) {
    return run_fctn(t, mask, config, nullptr);
}

FctnResult fctn_complete(const DenseTensor& t, const ObservationMask& mask, const FctnConfig& config,
                         const DenseTensor& warm_start) {
    return run_fctn(t, mask, config, &warm_start);
}

}  // namespace mgtc
