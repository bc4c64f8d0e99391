#pragma once

#include "mgtc/degradation.hpp"
#include "mgtc/tensor.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mgtc {

// Symmetric table of pairwise ranks R(i,j) >= 1 for a fully connected tensor
// network of order n. Modes are 0-based.
class FctnRankTable {
public:
    FctnRankTable() = default;
    explicit FctnRankTable(int order);
    static FctnRankTable uniform(int order, std::int64_t rank);

    int order() const { return order_; }
    std::int64_t rank(int i, int j) const;
    void set_rank(int i, int j, std::int64_t rank);

private:
    int order_ = 0;
    std::vector<std::int64_t> table_;  // order x order, diagonal unused
};

// N factors, each of order N. Factor k has mode sizes
// (R(0,k), ..., R(k-1,k), I_k, R(k,k+1), ..., R(k,N-1)); the physical mode
// sits at position k.
struct FctnFactorSet {
    std::vector<DenseTensor> factors;
    FctnRankTable ranks;
    Dims dims;

    void validate() const;
};

Dims fctn_factor_dims(const FctnRankTable& ranks, const Dims& dims, int k);

struct FctnConfig {
    FctnRankTable ranks;
    double rho = 0.1;  // proximal weight, > 0
    int max_iters = 30;
    double tol = 1e-4;
    std::uint64_t init_seed = 0;
    // Per-factor fill scale; unset means 1/sqrt(product of the factor's rank
    // mode sizes).
    std::optional<double> init_scale;

    void validate() const;
};

// Factors filled with seeded zero-mean Gaussian noise.
FctnFactorSet fctn_init(const Dims& dims, const FctnConfig& config);

// Contracts the full network over every shared rank index. Sequential pairwise
// contraction in increasing factor order.
DenseTensor fctn_contract(const FctnFactorSet& factors);

// Contraction of all factors except k, of order 2(N-1). For the a-th remaining
// factor j (in increasing j): if j < k its physical mode sits at position 2a
// and the dangling rank mode R(j,k) at 2a+1; if j > k the rank mode R(k,j)
// sits at 2a and the physical mode at 2a+1.
DenseTensor compose_leave_one_out(const FctnFactorSet& factors, int k);

// Positions of the dangling-rank modes (rank_modes) and physical modes
// (physical_modes) inside compose_leave_one_out(factors, k), in remaining-
// factor order. Unfolding over (rank_modes, physical_modes) gives the matrix
// satisfying X_(k) = (G_k)_(k) * M.
struct LeaveOneOutModes {
    std::vector<int> rank_modes;
    std::vector<int> physical_modes;
};
LeaveOneOutModes leave_one_out_modes(int order, int k);

double fctn_fit_objective(const DenseTensor& x, const FctnFactorSet& factors);

struct PamStepResult {
    DenseTensor x;
    FctnFactorSet factors;
};

// One proximal alternating sweep: ridge-update each factor in order against
// the current leave-one-out composition, then blend the contraction into X on
// the unobserved set and pin T on the observed set.
PamStepResult pam_step(const DenseTensor& x, const FctnFactorSet& factors, const DenseTensor& t,
                       const ObservationMask& mask, const FctnConfig& config);

struct FctnResult {
    DenseTensor x;
    FctnFactorSet factors;
    int iterations = 0;
    double final_rel_change = 0.0;
    std::vector<double> rel_change_series;
};

// PAM completion from X0 = apply_mask(t, mask) (or the given warm start) and
// freshly initialized factors; stops on relative change < tol or max_iters.
FctnResult fctn_complete(const DenseTensor& t, const ObservationMask& mask, const FctnConfig& config);
FctnResult fctn_complete(const DenseTensor& t, const ObservationMask& mask, const FctnConfig& config,
                         const DenseTensor& warm_start);

}  // namespace mgtc
