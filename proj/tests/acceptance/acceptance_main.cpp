// Scaled acceptance checks. Each criterion prints one PASS/FAIL line; the
// process exits nonzero if any fails. Criterion 9 needs external full-size
// data and is reported as skipped (see README).

#include "mgtc/coarse.hpp"
#include "mgtc/degradation.hpp"
#include "mgtc/fctn.hpp"
#include "mgtc/linalg.hpp"
#include "mgtc/metrics.hpp"
#include "mgtc/pipeline.hpp"
#include "mgtc/rng.hpp"
#include "mgtc/tensor.hpp"

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using mgtc::DenseTensor;
using mgtc::Dims;
using mgtc::Matrix;
using mgtc::ObservationMask;

struct Outcome {
    bool pass = false;
    std::string detail;
};

bool bitwise_equal(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims() != b.dims()) {
        return false;
    }
    for (std::int64_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) {
            return false;
        }
    }
    return true;
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    double worst = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

ObservationMask pixel_mask(const Dims& dims, double rate, std::uint64_t seed) {
    mgtc::DegradationSpec spec;
    spec.kind = mgtc::DegradationKind::pixel;
    spec.sampling_rate = rate;
    spec.seed = seed;
    return mgtc::make_mask(dims, spec);
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// --- criterion 1: fold/unfold roundtrips and contraction oracles ------------

Outcome criterion_algebra() {
    mgtc::SeededRng rng(101);
    int roundtrips = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int order = 2 + static_cast<int>(rng.uniform_below(4));
        Dims dims(static_cast<std::size_t>(order));
        for (auto& d : dims) {
            d = 1 + static_cast<std::int64_t>(rng.uniform_below(6));
        }
        const DenseTensor t = testdata::random_tensor(dims, 5000 + static_cast<std::uint64_t>(trial));

        const int mode = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(order)));
        const Matrix m = mgtc::unfold_mode(t, mode);
        if (!bitwise_equal(mgtc::fold_mode(m, mode, dims), t)) {
            return {false, "mode roundtrip broke at trial " + std::to_string(trial)};
        }
        if ((oracle::unfold(t, mode) - m).cwiseAbs().maxCoeff() != 0.0) {
            return {false, "unfold disagrees with the defining formula at trial " + std::to_string(trial)};
        }

        std::vector<int> perm(static_cast<std::size_t>(order));
        for (int i = 0; i < order; ++i) {
            perm[static_cast<std::size_t>(i)] = i;
        }
        for (int i = order - 1; i > 0; --i) {
            std::swap(perm[static_cast<std::size_t>(i)],
                      perm[static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(i + 1)))]);
        }
        const std::size_t cut = 1 + static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(order - 1)));
        const std::vector<int> rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
        const std::vector<int> cols(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
        const Matrix g = mgtc::generalized_unfold(t, rows, cols);
        if (!bitwise_equal(mgtc::generalized_fold(g, rows, cols, dims), t)) {
            return {false, "generalized roundtrip broke at trial " + std::to_string(trial)};
        }
        ++roundtrips;
    }

    double worst_contract = 0.0;
    double worst_identity = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int order = 3 + (trial % 2);
        Dims dims(static_cast<std::size_t>(order));
        for (auto& d : dims) {
            d = 1 + static_cast<std::int64_t>(rng.uniform_below(3));
        }
        mgtc::FctnRankTable ranks(order);
        for (int i = 0; i < order; ++i) {
            for (int j = i + 1; j < order; ++j) {
                ranks.set_rank(i, j, 1 + static_cast<std::int64_t>(rng.uniform_below(2)));
            }
        }
        const mgtc::FctnFactorSet set = testdata::random_fctn(dims, ranks, 9100 + static_cast<std::uint64_t>(trial));
        const DenseTensor x = mgtc::fctn_contract(set);
        worst_contract = std::max(worst_contract, max_abs_diff(x, oracle::fctn_eval(set)));

        if (trial % 10 == 0) {
            for (int k = 0; k < order; ++k) {
                const mgtc::LeaveOneOutModes modes = mgtc::leave_one_out_modes(order, k);
                const Matrix rest = mgtc::generalized_unfold(mgtc::compose_leave_one_out(set, k),
                                                             modes.rank_modes, modes.physical_modes);
                const Matrix lhs = oracle::unfold(x, k);
                const Matrix rhs =
                    mgtc::unfold_mode(set.factors[static_cast<std::size_t>(k)], k) * rest;
                worst_identity = std::max(worst_identity, (lhs - rhs).cwiseAbs().maxCoeff());
            }
        }
    }
    if (worst_contract > 1e-12) {
        return {false, "contraction mismatch " + fmt(worst_contract)};
    }
    if (worst_identity > 1e-12) {
        return {false, "leave-one-out identity mismatch " + fmt(worst_identity)};
    }
    std::ostringstream os;
    os << roundtrips << " roundtrips exact; contraction max err " << fmt(worst_contract)
       << "; unfolding identity max err " << fmt(worst_identity);
    return {true, os.str()};
}

// --- criterion 2: shrinkage against a variational oracle --------------------

// Minimizes tau*||Z||_* + 0.5*||Z - m||_F^2 without touching the library
// shrinkage path: Z = A*B^T with alternating exact ridge solves of
// tau/2*(||A||^2 + ||B||^2) + 0.5*||A B^T - m||^2, best of three restarts.
Matrix factored_prox(const Matrix& m, double tau, std::uint64_t seed) {
    const auto n = m.rows();
    Matrix best = Matrix::Zero(m.rows(), m.cols());
    double best_obj = std::numeric_limits<double>::infinity();
    mgtc::SeededRng rng(seed);
    for (int restart = 0; restart < 3; ++restart) {
        Matrix a(m.rows(), n);
        Matrix b(m.cols(), n);
        for (Matrix* f : {&a, &b}) {
            for (Eigen::Index i = 0; i < f->size(); ++i) {
                f->data()[i] = 0.5 * rng.normal();
            }
        }
        Matrix z = a * b.transpose();
        for (int iter = 0; iter < 200000; ++iter) {
            Matrix gram = b.transpose() * b;
            gram.diagonal().array() += tau;
            a = gram.llt().solve(b.transpose() * m.transpose()).transpose();
            gram = a.transpose() * a;
            gram.diagonal().array() += tau;
            b = gram.llt().solve(a.transpose() * m).transpose();
            Matrix next = a * b.transpose();
            const double delta = (next - z).cwiseAbs().maxCoeff();
            z.swap(next);
            if (delta < 1e-14) {
                break;
            }
        }
        const double obj =
            0.5 * tau * (a.squaredNorm() + b.squaredNorm()) + 0.5 * (z - m).squaredNorm();
        if (obj < best_obj) {
            best_obj = obj;
            best = z;
        }
    }
    return best;
}

Outcome criterion_prox() {
    mgtc::SeededRng rng(202);
    double worst_prox = 0.0;
    double worst_sigma = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m(4, 4);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = rng.normal();
        }
        const double tau = 0.15 + 1.3 * rng.uniform_double();
        const Matrix z = mgtc::svt(m, tau);
        worst_prox = std::max(
            worst_prox, (z - factored_prox(m, tau, 7000 + static_cast<std::uint64_t>(trial))).cwiseAbs().maxCoeff());

        const Eigen::JacobiSVD<Matrix> in_svd(m);
        const Eigen::JacobiSVD<Matrix> out_svd(z);
        for (Eigen::Index i = 0; i < 4; ++i) {
            const double expected = std::max(in_svd.singularValues()[i] - tau, 0.0);
            worst_sigma = std::max(worst_sigma, std::abs(out_svd.singularValues()[i] - expected));
        }
    }
    if (worst_prox > 1e-6) {
        return {false, "prox mismatch " + fmt(worst_prox)};
    }
    if (worst_sigma > 1e-9) {
        return {false, "singular-value law mismatch " + fmt(worst_sigma)};
    }
    return {true, "20 matrices; prox max err " + fmt(worst_prox) + "; sigma law max err " + fmt(worst_sigma)};
}

// --- criterion 3: full-mask identities ---------------------------------------

mgtc::PipelineConfig small_pipeline_config() {
    mgtc::PipelineConfig config;
    config.w1 = 4;
    config.stride1 = 2;
    config.w2 = 4;
    config.v = 3;
    config.blocks_per_cluster = 10;
    config.k_similar = 4;
    config.search_radius = 3;
    config.iters = 1;
    config.kmeans_max_iters = 5;
    config.workers = 1;
    config.seed = 7;
    config.coarse.max_iters = 8;
    config.fctn_init.max_iters = 5;
    config.fctn_group.max_iters = 4;
    return config;
}

Outcome criterion_identities() {
    const DenseTensor t = testdata::smooth_cube(12, 12, 3);
    const ObservationMask full = ObservationMask::full(t.dims());

    mgtc::CoarseConfig coarse;
    coarse.alpha = {1.0, 1.0, 1.0};
    coarse.max_iters = 10;
    if (!bitwise_equal(mgtc::coarse_complete(t, full, coarse).x, t)) {
        return {false, "coarse_complete changed fully observed data"};
    }

    mgtc::FctnConfig fctn;
    fctn.ranks = mgtc::FctnRankTable::uniform(3, 2);
    fctn.max_iters = 10;
    if (!bitwise_equal(mgtc::fctn_complete(t, full, fctn).x, t)) {
        return {false, "fctn_complete changed fully observed data"};
    }

    mgtc::PipelineConfig config = small_pipeline_config();
    for (const mgtc::Ablation ablation :
         {mgtc::Ablation::full, mgtc::Ablation::coarse_only, mgtc::Ablation::fine_only}) {
        config.ablation = ablation;
        if (!bitwise_equal(mgtc::recover(t, full, config).x, t)) {
            return {false, std::string("recover(") + mgtc::ablation_name(ablation) +
                               ") changed fully observed data"};
        }
    }
    return {true, "coarse, fctn and all three recover ablations return the input bitwise"};
}

// --- criterion 4: PAM objective descent --------------------------------------

Outcome criterion_descent() {
    double worst_rise = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const Dims dims = {6, 6, 4};
        const DenseTensor t = testdata::random_tensor(dims, 1500 + static_cast<std::uint64_t>(inst));
        const ObservationMask mask = pixel_mask(dims, 0.5, 2600 + static_cast<std::uint64_t>(inst));

        mgtc::FctnConfig config;
        config.ranks = mgtc::FctnRankTable::uniform(3, 1 + (inst % 2));
        config.rho = 0.1;
        config.init_seed = 3700 + static_cast<std::uint64_t>(inst);

        DenseTensor x = mgtc::apply_mask(t, mask);
        mgtc::FctnFactorSet factors = mgtc::fctn_init(dims, config);
        double obj = mgtc::fctn_fit_objective(x, factors);
        for (int sweep = 0; sweep < 5; ++sweep) {
            mgtc::PamStepResult next = mgtc::pam_step(x, factors, t, mask, config);
            const double next_obj = mgtc::fctn_fit_objective(next.x, next.factors);
            worst_rise = std::max(worst_rise, (next_obj - obj) / std::max(1.0, obj));
            if (next_obj > obj + 1e-9 * std::max(1.0, obj)) {
                return {false, "objective rose " + fmt(next_obj - obj) + " at instance " +
                                   std::to_string(inst) + " sweep " + std::to_string(sweep)};
            }
            obj = next_obj;
            x = std::move(next.x);
            factors = std::move(next.factors);
        }
    }
    return {true, "500 sweeps over 100 instances; worst relative rise " + fmt(worst_rise)};
}

// --- criterion 5: exact-model recovery ---------------------------------------

Outcome criterion_exact_models() {
    const Dims fdims = {8, 8, 4};
    const mgtc::FctnRankTable rank2 = mgtc::FctnRankTable::uniform(3, 2);
    const DenseTensor fctn_truth = mgtc::fctn_contract(testdata::random_fctn(fdims, rank2, 42, 0.7));
    const ObservationMask fmask = pixel_mask(fdims, 0.5, 43);

    mgtc::FctnConfig fcfg;
    fcfg.ranks = rank2;
    fcfg.rho = 0.02;
    fcfg.max_iters = 1200;
    fcfg.tol = 1e-10;
    fcfg.init_seed = 44;
    const double fctn_rse = mgtc::relative_squared_error(mgtc::fctn_complete(fctn_truth, fmask, fcfg).x, fctn_truth);
    if (!(fctn_rse < 1e-2)) {
        return {false, "fctn model rse " + fmt(fctn_rse) + " (need < 0.01)"};
    }

    const Dims tdims = {20, 20, 20};
    const DenseTensor tucker_truth = testdata::tucker_cube(tdims, 2, 45);
    const ObservationMask tmask = pixel_mask(tdims, 0.3, 46);
    const double zero_fill = mgtc::relative_squared_error(mgtc::apply_mask(tucker_truth, tmask), tucker_truth);

    mgtc::CoarseConfig ccfg;
    ccfg.alpha = {1.0, 1.0, 1.0};
    ccfg.max_iters = 250;
    ccfg.tol = 1e-8;
    const double tucker_rse =
        mgtc::relative_squared_error(mgtc::coarse_complete(tucker_truth, tmask, ccfg).x, tucker_truth);
    if (!(tucker_rse <= zero_fill / 5.0)) {
        return {false, "tucker rse " + fmt(tucker_rse) + " vs zero-fill " + fmt(zero_fill)};
    }
    return {true, "fctn rse " + fmt(fctn_rse) + "; tucker rse " + fmt(tucker_rse) + " vs zero-fill " +
                      fmt(zero_fill)};
}

// --- criteria 6-8: desk-scale end-to-end runs --------------------------------

struct DeskArtifacts {
    mgtc::PipelineConfig config;
    DenseTensor truth = DenseTensor::zeros({1});
    DenseTensor pixel_observed = DenseTensor::zeros({1});
    std::optional<ObservationMask> pixel_mask;
    std::optional<mgtc::RecoveryResult> pixel_full;
    DenseTensor stripe_observed = DenseTensor::zeros({1});
    std::optional<ObservationMask> stripe_mask;
    std::optional<mgtc::RecoveryResult> stripe_full;
    std::int64_t snapshot_stages = 0;
    std::int64_t snapshot_violations = 0;
};

DeskArtifacts& desk() {
    static DeskArtifacts a;
    return a;
}

mgtc::PipelineConfig desk_config() {
    mgtc::PipelineConfig config;
    config.w1 = 6;
    config.stride1 = 3;
    config.w2 = 6;
    config.v = 5;
    config.blocks_per_cluster = 16;
    config.k_similar = 6;
    config.search_radius = 6;
    config.iters = 1;
    config.kmeans_max_iters = 8;
    config.workers = 1;
    config.seed = 77;
    config.coarse.max_iters = 40;
    config.fctn_init.max_iters = 15;
    config.fctn_group.max_iters = 10;
    return config;
}

Outcome criterion_desk_benchmark() {
    DeskArtifacts& a = desk();
    a.config = desk_config();
    a.truth = testdata::smooth_cube(30, 30, 10);

    mgtc::DegradationSpec pixel_spec;
    pixel_spec.kind = mgtc::DegradationKind::pixel;
    pixel_spec.sampling_rate = 0.2;
    pixel_spec.seed = 501;
    a.pixel_mask = mgtc::make_mask(a.truth.dims(), pixel_spec);
    a.pixel_observed = mgtc::apply_mask(a.truth, *a.pixel_mask);

    mgtc::DegradationSpec stripe_spec;
    stripe_spec.kind = mgtc::DegradationKind::stripe;
    stripe_spec.sampling_rate = 0.25;
    stripe_spec.seed = 502;
    a.stripe_mask = mgtc::make_mask(a.truth.dims(), stripe_spec);
    a.stripe_observed = mgtc::apply_mask(a.truth, *a.stripe_mask);

    // Observer doubles as the criterion-8 probe on the pixel run.
    const mgtc::StageObserver probe = [&a](const mgtc::StageSnapshot& snapshot) {
        ++a.snapshot_stages;
        for (std::int64_t i = 0; i < snapshot.mask.size(); ++i) {
            if (snapshot.mask.observed(i) && snapshot.x[i] != snapshot.observed[i]) {
                ++a.snapshot_violations;
            }
        }
    };

    a.pixel_full = mgtc::recover(a.pixel_observed, *a.pixel_mask, a.config, probe);
    const double full_psnr = mgtc::evaluate_quality(a.pixel_full->x, a.truth).psnr_db;
    const double zero_psnr = mgtc::evaluate_quality(a.pixel_observed, a.truth).psnr_db;

    a.stripe_full = mgtc::recover(a.stripe_observed, *a.stripe_mask, a.config);
    const double stripe_full_psnr = mgtc::evaluate_quality(a.stripe_full->x, a.truth).psnr_db;

    mgtc::PipelineConfig ablated = a.config;
    ablated.ablation = mgtc::Ablation::coarse_only;
    const double stripe_coarse_psnr =
        mgtc::evaluate_quality(mgtc::recover(a.stripe_observed, *a.stripe_mask, ablated).x, a.truth).psnr_db;
    ablated.ablation = mgtc::Ablation::fine_only;
    const double stripe_fine_psnr =
        mgtc::evaluate_quality(mgtc::recover(a.stripe_observed, *a.stripe_mask, ablated).x, a.truth).psnr_db;

    std::ostringstream os;
    os << "pixel full " << fmt(full_psnr) << " dB vs zero-fill " << fmt(zero_psnr) << " dB; stripe full "
       << fmt(stripe_full_psnr) << " dB vs coarse " << fmt(stripe_coarse_psnr) << " / fine "
       << fmt(stripe_fine_psnr) << " dB";
    if (!(full_psnr >= zero_psnr + 10.0)) {
        return {false, "pixel gain too small: " + os.str()};
    }
    if (!(stripe_full_psnr >= std::max(stripe_coarse_psnr, stripe_fine_psnr))) {
        return {false, "stripe ablation ordering broke: " + os.str()};
    }
    return {true, os.str()};
}

Outcome criterion_determinism() {
    DeskArtifacts& a = desk();
    if (!a.pixel_full || !a.stripe_full) {
        return {false, "desk benchmark artifacts unavailable"};
    }

    const mgtc::RecoveryResult pixel_again = mgtc::recover(a.pixel_observed, *a.pixel_mask, a.config);
    if (!bitwise_equal(pixel_again.x, a.pixel_full->x) ||
        pixel_again.report.to_text(false) != a.pixel_full->report.to_text(false)) {
        return {false, "pixel rerun diverged"};
    }

    const mgtc::RecoveryResult stripe_again = mgtc::recover(a.stripe_observed, *a.stripe_mask, a.config);
    if (!bitwise_equal(stripe_again.x, a.stripe_full->x) ||
        stripe_again.report.to_text(false) != a.stripe_full->report.to_text(false)) {
        return {false, "stripe rerun diverged"};
    }

    mgtc::PipelineConfig pooled = a.config;
    pooled.workers = 4;
    const mgtc::RecoveryResult pixel_pooled = mgtc::recover(a.pixel_observed, *a.pixel_mask, pooled);
    if (!bitwise_equal(pixel_pooled.x, a.pixel_full->x)) {
        return {false, "4-worker rerun diverged from the serial run"};
    }
    return {true, "reruns and a 4-worker pool reproduce tensors and reports bitwise"};
}

Outcome criterion_constraints() {
    DeskArtifacts& a = desk();
    if (!a.pixel_full) {
        return {false, "desk benchmark artifacts unavailable"};
    }
    if (a.snapshot_stages == 0) {
        return {false, "no stage snapshots were observed"};
    }
    if (a.snapshot_violations != 0) {
        return {false, std::to_string(a.snapshot_violations) + " observed entries drifted"};
    }
    return {true, std::to_string(a.snapshot_stages) + " stage snapshots keep every observed entry bitwise"};
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* label;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> entries = {
        {1, "algebra oracles", criterion_algebra},
        {2, "shrinkage prox oracle", criterion_prox},
        {3, "full-mask identities", criterion_identities},
        {4, "PAM descent", criterion_descent},
        {5, "exact-model recovery", criterion_exact_models},
        {6, "desk benchmark", criterion_desk_benchmark},
        {7, "determinism", criterion_determinism},
        {8, "constraint preservation", criterion_constraints},
    };

    int failures = 0;
    for (const Entry& entry : entries) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = entry.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d: %s (%.2fs) - %s: %s\n", entry.id, outcome.pass ? "PASS" : "FAIL", seconds,
                    entry.label, outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.pass) {
            ++failures;
        }
    }
    std::printf("criterion 9: SKIPPED - full-size reference benchmark; needs the external 256x256x31 cube "
                "and multi-hour runtime (see README)\n");
    return failures == 0 ? 0 : 1;
}
