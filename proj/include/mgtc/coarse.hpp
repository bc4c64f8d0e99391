#pragma once

#include "mgtc/degradation.hpp"
#include "mgtc/tensor.hpp"

#include <vector>

namespace mgtc {

// ADMM completion under a low-Tucker-rank penalty on the mode unfoldings.
// The default penalty is the log-determinant style surrogate
// sum_i log(sigma_i + epsilon), handled by a majorize-minimize weighted
// shrinkage step; `weighted = false` falls back to plain nuclear-norm
// shrinkage with threshold alpha_k / mu.
struct CoarseConfig {
    std::vector<double> alpha = {1.0, 1.5, 1.2};  // per-mode weights, size must equal tensor order
    double mu0 = 1.0 / 160.0;
    double eta = 1.1;         // geometric step multiplier, > 1
    double epsilon = 1e-6;    // log-surrogate offset
    int max_iters = 50;
    double tol = 1e-4;        // relative-change stopping threshold
    bool weighted = true;     // false: plain shrinkage per the nuclear-norm model

    void validate(int order) const;
};

struct CoarseState {
    DenseTensor x;
    std::vector<DenseTensor> m;       // one auxiliary tensor per mode
    std::vector<DenseTensor> lambda;  // one multiplier per mode
    double mu = 0.0;
    int iter = 0;
    // Singular values of the previous iterate's mode-k unfolding; drives the
    // weighted shrinkage thresholds.
    std::vector<std::vector<double>> prev_sigma;
};

CoarseState coarse_init_state(const DenseTensor& t, const ObservationMask& mask, const CoarseConfig& config);

// One ADMM sweep: shrink each mode unfolding into M_k, average the auxiliaries
// back into X (observed entries pinned to T), update multipliers, grow mu.
CoarseState coarse_step(const CoarseState& state, const DenseTensor& t, const ObservationMask& mask,
                        const CoarseConfig& config);

struct CoarseResult {
    DenseTensor x;
    int iterations = 0;
    double final_rel_change = 0.0;
    std::vector<double> rel_change_series;
};

// Iterates coarse_step from X0 = apply_mask(t, mask) (or the given warm start)
// until the relative change drops below config.tol or max_iters is reached.
// The output equals t exactly on the observed set.
CoarseResult coarse_complete(const DenseTensor& t, const ObservationMask& mask, const CoarseConfig& config);
CoarseResult coarse_complete(const DenseTensor& t, const ObservationMask& mask, const CoarseConfig& config,
                             const DenseTensor& warm_start);

}  // namespace mgtc
