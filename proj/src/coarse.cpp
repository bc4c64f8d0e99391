#include "mgtc/coarse.hpp"

#include "mgtc/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

namespace mgtc {

namespace {

// Singular values only; cheaper than the full decomposition.
std::vector<double> singular_values_of(const Matrix& m) {
    Eigen::BDCSVD<Matrix> solver(m);
    const auto& sv = solver.singularValues();
    return {sv.data(), sv.data() + sv.size()};
}

}  // namespace

void CoarseConfig::validate(int order) const {
    if (static_cast<int>(alpha.size()) != order) {
        throw std::invalid_argument("coarse: alpha has " + std::to_string(alpha.size()) +
                                    " weights for an order-" + std::to_string(order) + " tensor");
    }
    for (double a : alpha) {
        if (!(a > 0.0)) throw std::invalid_argument("coarse: alpha weights must be positive");
    }
    if (!(mu0 > 0.0)) throw std::invalid_argument("coarse: mu0 must be positive");
    if (!(eta > 1.0)) throw std::invalid_argument("coarse: eta must be greater than 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("coarse: epsilon must be positive");
    if (max_iters < 1) throw std::invalid_argument("coarse: max_iters must be >= 1");
}

CoarseState coarse_init_state(const DenseTensor& t, const ObservationMask& mask, const CoarseConfig& config) {
    config.validate(t.order());
    CoarseState state;
    state.x = apply_mask(t, mask);
    state.m.assign(static_cast<std::size_t>(t.order()), state.x);
    state.lambda.assign(static_cast<std::size_t>(t.order()), DenseTensor::zeros(t.dims()));
    state.mu = config.mu0;
    state.iter = 0;
    state.prev_sigma.resize(static_cast<std::size_t>(t.order()));
    for (int k = 0; k < t.order(); ++k) {
        state.prev_sigma[static_cast<std::size_t>(k)] = singular_values_of(unfold_mode(state.x, k));
    }
    return state;
}

CoarseState coarse_step(const CoarseState& state, const DenseTensor& t, const ObservationMask& mask,
                        const CoarseConfig& config) {
    const int order = t.order();
    config.validate(order);
    if (!(state.mu > 0.0)) throw std::invalid_argument("coarse_step: mu must be positive");

    CoarseState next;
    next.m.resize(static_cast<std::size_t>(order));
    next.lambda.resize(static_cast<std::size_t>(order));
    next.prev_sigma.resize(static_cast<std::size_t>(order));

    // M_k update: shrink the singular values of X_(k) + Lambda_k,(k) / mu.
    for (int k = 0; k < order; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        const Matrix z = unfold_mode(state.x, k) + unfold_mode(state.lambda[ks], k) / state.mu;
        std::vector<double> thresholds;
        if (config.weighted) {
            const auto& sigma_prev = state.prev_sigma[ks];
            thresholds.resize(sigma_prev.size());
            for (std::size_t i = 0; i < sigma_prev.size(); ++i) {
                thresholds[i] = config.alpha[ks] / (state.mu * (sigma_prev[i] + config.epsilon));
            }
        } else {
            thresholds.push_back(config.alpha[ks] / state.mu);
        }
        try {
            next.m[ks] = fold_mode(svt(z, thresholds), k, t.dims());
        } catch (const std::exception& e) {
            throw std::runtime_error("coarse_step: mode " + std::to_string(k) + ": " + e.what());
        }
    }

    // X update: average the auxiliaries off the observed set, pin T on it.
    DenseTensor x = DenseTensor::zeros(t.dims());
    const double inv_order = 1.0 / static_cast<double>(order);
    for (int k = 0; k < order; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        for (std::int64_t i = 0; i < x.size(); ++i) {
            x[i] += next.m[ks][i] - state.lambda[ks][i] / state.mu;
        }
    }
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] *= inv_order;
    next.x = project_observed(x, t, mask);

    // Multiplier and penalty updates.
    for (int k = 0; k < order; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        DenseTensor lambda = state.lambda[ks];
        for (std::int64_t i = 0; i < lambda.size(); ++i) {
            lambda[i] -= state.mu * (next.m[ks][i] - next.x[i]);
        }
        next.lambda[ks] = std::move(lambda);
    }
    next.mu = config.eta * state.mu;
    next.iter = state.iter + 1;
    for (int k = 0; k < order; ++k) {
        next.prev_sigma[static_cast<std::size_t>(k)] = singular_values_of(unfold_mode(next.x, k));
    }
    return next;
}

namespace {

CoarseResult run_coarse(const DenseTensor& t, const ObservationMask& mask, const CoarseConfig& config,
                        const DenseTensor* warm_start) {
    if (t.dims() != mask.dims()) throw std::invalid_argument("coarse_complete: dimension mismatch");
    if (t.order() < 2) throw std::invalid_argument("coarse_complete: tensor order must be >= 2");
    if (mask.observed_count() == 0) throw std::invalid_argument("coarse_complete: empty observation mask");
    require_finite(t, "coarse_complete input");

    CoarseState state = coarse_init_state(t, mask, config);
    if (warm_start != nullptr) {
        if (!warm_start->same_dims(t)) throw std::invalid_argument("coarse_complete: warm start dimension mismatch");
        require_finite(*warm_start, "coarse_complete warm start");
        state.x = project_observed(*warm_start, t, mask);
        state.m.assign(static_cast<std::size_t>(t.order()), state.x);
        for (int k = 0; k < t.order(); ++k) {
            state.prev_sigma[static_cast<std::size_t>(k)] =
                singular_values_of(unfold_mode(state.x, k));
        }
    }

    CoarseResult result;
    for (int it = 0; it < config.max_iters; ++it) {
        CoarseState next = coarse_step(state, t, mask, config);
        const double change = relative_change(next.x, state.x);
        result.rel_change_series.push_back(change);
        state = std::move(next);
        result.iterations = it + 1;
        result.final_rel_change = change;
        if (change < config.tol) break;
    }
    result.x = std::move(state.x);
    return result;
}

}  // namespace

CoarseResult coarse_complete(const DenseTensor& t, const ObservationMask& mask, const CoarseConfig& config) {
    return run_coarse(t, mask, config, nullptr);
}

CoarseResult coarse_complete(const DenseTensor& t, const ObservationMask& mask, const CoarseConfig& config,
                             const DenseTensor& warm_start) {
    return run_coarse(t, mask, config, &warm_start);
}

}  // namespace mgtc
