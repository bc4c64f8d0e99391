#include "mgtc/fctn.hpp"
#include "mgtc/linalg.hpp"

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <cmath>
#include <vector>

using namespace mgtc;

namespace {

double max_diff(const DenseTensor& a, const DenseTensor& b) {
    REQUIRE(a.dims() == b.dims());
    double worst = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

// One sweep written straight from the update formulas: plain LU ridge solve
// against the naive unfolding of X and G.
PamStepResult reference_pam_step(const DenseTensor& x, const FctnFactorSet& factors, const DenseTensor& t,
                                 const ObservationMask& mask, const FctnConfig& cfg) {
    const int order = x.order();
    PamStepResult out;
    out.factors = factors;
    for (int k = 0; k < order; ++k) {
        const DenseTensor m = compose_leave_one_out(out.factors, k);
        const LeaveOneOutModes modes = leave_one_out_modes(order, k);
        const Matrix mk = generalized_unfold(m, modes.rank_modes, modes.physical_modes);
        const Matrix xk = oracle::unfold(x, k);
        const Matrix gk = oracle::unfold(out.factors.factors[static_cast<std::size_t>(k)], k);
        Matrix a = mk * mk.transpose();
        a.diagonal().array() += cfg.rho;
        const Matrix b = xk * mk.transpose() + cfg.rho * gk;
        const Matrix g_new = a.fullPivLu().solve(b.transpose()).transpose();
        out.factors.factors[static_cast<std::size_t>(k)] =
            fold_mode(g_new, k, out.factors.factors[static_cast<std::size_t>(k)].dims());
    }
    const DenseTensor fc = fctn_contract(out.factors);
    DenseTensor blended = DenseTensor::zeros(x.dims());
    for (std::int64_t i = 0; i < blended.size(); ++i) {
        blended[i] = (fc[i] + cfg.rho * x[i]) / (1.0 + cfg.rho);
    }
    out.x = project_observed(blended, t, mask);
    return out;
}

}  // namespace

TEST_CASE("rank table is symmetric and validated") {
    FctnRankTable rt(4);
    CHECK(rt.order() == 4);
    CHECK(rt.rank(0, 3) == 1);
    rt.set_rank(1, 3, 5);
    CHECK(rt.rank(3, 1) == 5);
    CHECK(rt.rank(1, 3) == 5);
    CHECK_THROWS_AS((void)rt.rank(2, 2), std::invalid_argument);
    CHECK_THROWS_AS(rt.set_rank(0, 4, 2), std::invalid_argument);
    CHECK_THROWS_AS(rt.set_rank(0, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(FctnRankTable(1), std::invalid_argument);

    FctnRankTable u = FctnRankTable::uniform(3, 4);
    CHECK(u.rank(0, 1) == 4);
    CHECK(u.rank(0, 2) == 4);
    CHECK(u.rank(1, 2) == 4);
}

TEST_CASE("factor dims interleave ranks around the physical mode") {
    FctnRankTable rt(3);
    rt.set_rank(0, 1, 2);
    rt.set_rank(0, 2, 3);
    rt.set_rank(1, 2, 4);
    const Dims dims = {7, 8, 9};
    CHECK(fctn_factor_dims(rt, dims, 0) == Dims{7, 2, 3});
    CHECK(fctn_factor_dims(rt, dims, 1) == Dims{2, 8, 4});
    CHECK(fctn_factor_dims(rt, dims, 2) == Dims{3, 4, 9});
    CHECK_THROWS_AS((void)fctn_factor_dims(rt, {7, 8}, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)fctn_factor_dims(rt, dims, 3), std::invalid_argument);
}

TEST_CASE("factor set validation catches inconsistent shapes") {
    const Dims dims = {4, 5, 3};
    FctnConfig cfg;
    cfg.ranks = FctnRankTable::uniform(3, 2);
    FctnFactorSet set = fctn_init(dims, cfg);
    CHECK_NOTHROW(set.validate());
    set.factors[1] = DenseTensor::zeros({2, 5, 3});
    CHECK_THROWS_AS(set.validate(), std::invalid_argument);
}

TEST_CASE("fctn_init is seed-deterministic with the documented default scale") {
    const Dims dims = {4, 5, 3};
    FctnConfig cfg;
    cfg.ranks = FctnRankTable::uniform(3, 2);
    cfg.init_seed = 77;
    FctnFactorSet a = fctn_init(dims, cfg);
    FctnFactorSet b = fctn_init(dims, cfg);
    for (int k = 0; k < 3; ++k) {
        CHECK(max_diff(a.factors[static_cast<std::size_t>(k)], b.factors[static_cast<std::size_t>(k)]) == 0.0);
    }

    cfg.init_seed = 78;
    FctnFactorSet c = fctn_init(dims, cfg);
    CHECK(max_diff(a.factors[0], c.factors[0]) > 0.0);

    // Uniform rank 2, order 3: each factor has rank-mode product 4, so the
    // default fill scale is 1/2.
    cfg.init_seed = 77;
    cfg.init_scale = 0.5;
    FctnFactorSet d = fctn_init(dims, cfg);
    for (int k = 0; k < 3; ++k) {
        CHECK(max_diff(a.factors[static_cast<std::size_t>(k)], d.factors[static_cast<std::size_t>(k)]) == 0.0);
    }

    cfg.init_scale = 0.0;
    FctnFactorSet z = fctn_init(dims, cfg);
    for (int k = 0; k < 3; ++k) {
        CHECK(frobenius_norm(z.factors[static_cast<std::size_t>(k)]) == 0.0);
    }
}

TEST_CASE("fctn_contract matches the direct all-pairs summation") {
    SUBCASE("order 3, mixed ranks") {
        FctnRankTable rt(3);
        rt.set_rank(0, 1, 2);
        rt.set_rank(0, 2, 3);
        rt.set_rank(1, 2, 2);
        FctnFactorSet set = testdata::random_fctn({4, 3, 5}, rt, 11);
        DenseTensor fast = fctn_contract(set);
        DenseTensor slow = oracle::fctn_eval(set);
        CHECK(max_diff(fast, slow) < 1e-11);
    }
    SUBCASE("order 4, uniform rank 2") {
        FctnFactorSet set = testdata::random_fctn({3, 4, 2, 3}, FctnRankTable::uniform(4, 2), 13);
        DenseTensor fast = fctn_contract(set);
        DenseTensor slow = oracle::fctn_eval(set);
        CHECK(max_diff(fast, slow) < 1e-11);
    }
    SUBCASE("rank 1 network is an outer product") {
        FctnFactorSet set = testdata::random_fctn({3, 2, 4}, FctnRankTable::uniform(3, 1), 17);
        DenseTensor fast = fctn_contract(set);
        DenseTensor slow = oracle::fctn_eval(set);
        CHECK(max_diff(fast, slow) < 1e-13);
    }
}

TEST_CASE("leave_one_out_modes places dangling ranks per the ordering rule") {
    const LeaveOneOutModes m1 = leave_one_out_modes(4, 1);
    CHECK(m1.physical_modes == std::vector<int>{0, 3, 5});
    CHECK(m1.rank_modes == std::vector<int>{1, 2, 4});

    const LeaveOneOutModes m0 = leave_one_out_modes(3, 0);
    CHECK(m0.physical_modes == std::vector<int>{1, 3});
    CHECK(m0.rank_modes == std::vector<int>{0, 2});

    const LeaveOneOutModes m2 = leave_one_out_modes(3, 2);
    CHECK(m2.physical_modes == std::vector<int>{0, 2});
    CHECK(m2.rank_modes == std::vector<int>{1, 3});

    CHECK_THROWS_AS((void)leave_one_out_modes(3, 3), std::invalid_argument);
}

TEST_CASE("leave-one-out composition satisfies the unfolding identity") {
    // X_(k) = (G_k)_(k) * M with M unfolded over (rank modes, physical modes).
    auto check_identity = [](const FctnFactorSet& set) {
        const DenseTensor x = oracle::fctn_eval(set);
        const int order = static_cast<int>(set.dims.size());
        for (int k = 0; k < order; ++k) {
            const DenseTensor m = compose_leave_one_out(set, k);
            const LeaveOneOutModes modes = leave_one_out_modes(order, k);
            const Matrix mk = generalized_unfold(m, modes.rank_modes, modes.physical_modes);
            const Matrix lhs = oracle::unfold(x, k);
            const Matrix gk = oracle::unfold(set.factors[static_cast<std::size_t>(k)], k);
            const Matrix rhs = gk * mk;
            REQUIRE(lhs.rows() == rhs.rows());
            REQUIRE(lhs.cols() == rhs.cols());
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-11);
        }
    };

    FctnRankTable rt3(3);
    rt3.set_rank(0, 1, 2);
    rt3.set_rank(0, 2, 3);
    rt3.set_rank(1, 2, 2);
    check_identity(testdata::random_fctn({4, 3, 5}, rt3, 19));

    FctnRankTable rt4(4);
    rt4.set_rank(0, 1, 2);
    rt4.set_rank(0, 2, 2);
    rt4.set_rank(0, 3, 1);
    rt4.set_rank(1, 2, 3);
    rt4.set_rank(1, 3, 2);
    rt4.set_rank(2, 3, 1);
    check_identity(testdata::random_fctn({3, 3, 2, 4}, rt4, 23));
}

TEST_CASE("pam_step matches the transcribed sweep") {
    const Dims dims = {5, 4, 3};
    DenseTensor truth = testdata::random_tensor(dims, 31);
    ObservationMask mask = make_pixel_mask(dims, 0.6, 32);
    DenseTensor t = apply_mask(truth, mask);
    DenseTensor x = t;

    FctnConfig cfg;
    cfg.ranks = FctnRankTable::uniform(3, 2);
    cfg.rho = 0.2;
    cfg.init_seed = 33;
    FctnFactorSet factors = fctn_init(dims, cfg);

    for (int sweep = 0; sweep < 3; ++sweep) {
        PamStepResult fast = pam_step(x, factors, t, mask, cfg);
        PamStepResult slow = reference_pam_step(x, factors, t, mask, cfg);
        CHECK(max_diff(fast.x, slow.x) < 1e-8);
        for (int k = 0; k < 3; ++k) {
            CHECK(max_diff(fast.factors.factors[static_cast<std::size_t>(k)],
                           slow.factors.factors[static_cast<std::size_t>(k)]) < 1e-8);
        }
        x = fast.x;
        factors = fast.factors;
    }
}

TEST_CASE("pam_step pins observations and blends elsewhere") {
    const Dims dims = {4, 4, 3};
    DenseTensor truth = testdata::random_tensor(dims, 41);
    ObservationMask mask = make_pixel_mask(dims, 0.5, 42);
    DenseTensor t = apply_mask(truth, mask);
    DenseTensor x = testdata::random_tensor(dims, 43);
    x = project_observed(x, t, mask);

    FctnConfig cfg;
    cfg.ranks = FctnRankTable::uniform(3, 2);
    cfg.rho = 0.5;
    cfg.init_seed = 44;
    FctnFactorSet factors = fctn_init(dims, cfg);

    PamStepResult step = pam_step(x, factors, t, mask, cfg);
    const DenseTensor fc = fctn_contract(step.factors);
    for (std::int64_t i = 0; i < t.size(); ++i) {
        if (mask.observed(i)) {
            CHECK(step.x[i] == t[i]);
        } else {
            CHECK(step.x[i] == doctest::Approx((fc[i] + cfg.rho * x[i]) / (1.0 + cfg.rho)).epsilon(1e-13));
        }
    }
}

TEST_CASE("pam sweeps never increase the constrained fit objective") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dims dims = {5, 5, 3};
        DenseTensor truth = testdata::random_tensor(dims, 100 + seed);
        ObservationMask mask = make_pixel_mask(dims, 0.5, 200 + seed);
        DenseTensor t = apply_mask(truth, mask);
        DenseTensor x = t;

        FctnConfig cfg;
        cfg.ranks = FctnRankTable::uniform(3, 2);
        cfg.rho = 0.1;
        cfg.init_seed = 300 + seed;
        FctnFactorSet factors = fctn_init(dims, cfg);

        double prev = fctn_fit_objective(x, factors);
        for (int sweep = 0; sweep < 6; ++sweep) {
            PamStepResult step = pam_step(x, factors, t, mask, cfg);
            x = step.x;
            factors = step.factors;
            const double cur = fctn_fit_objective(x, factors);
            CHECK(cur <= prev + 1e-9);
            prev = cur;
        }
    }
}

TEST_CASE("fctn_complete with a full mask returns the input bitwise") {
    DenseTensor t = testdata::random_tensor({4, 5, 3}, 51);
    ObservationMask mask = ObservationMask::full(t.dims());
    FctnConfig cfg;
    cfg.ranks = FctnRankTable::uniform(3, 2);
    FctnResult r = fctn_complete(t, mask, cfg);
    CHECK(r.iterations == 1);
    CHECK(max_diff(r.x, t) == 0.0);
}

TEST_CASE("fctn_complete recovers data generated by its own model class") {
    const Dims dims = {6, 6, 4};
    FctnFactorSet gen = testdata::random_fctn(dims, FctnRankTable::uniform(3, 2), 300, 0.6);
    DenseTensor truth = fctn_contract(gen);
    ObservationMask mask = make_pixel_mask(dims, 0.6, 301);
    DenseTensor t = apply_mask(truth, mask);

    FctnConfig cfg;
    cfg.ranks = FctnRankTable::uniform(3, 2);
    cfg.rho = 0.05;
    cfg.max_iters = 400;
    cfg.tol = 1e-9;
    cfg.init_seed = 302;
    FctnResult r = fctn_complete(t, mask, cfg);

    double num = 0.0, den = 0.0;
    for (std::int64_t i = 0; i < truth.size(); ++i) {
        const double d = r.x[i] - truth[i];
        num += d * d;
        den += truth[i] * truth[i];
    }
    CHECK(std::sqrt(num / den) < 0.01);
    CHECK(r.rel_change_series.size() == static_cast<std::size_t>(r.iterations));
}

TEST_CASE("warm start equal to the masked input reproduces the cold run") {
    const Dims dims = {5, 4, 3};
    DenseTensor truth = testdata::random_tensor(dims, 71);
    ObservationMask mask = make_pixel_mask(dims, 0.5, 72);
    DenseTensor t = apply_mask(truth, mask);
    FctnConfig cfg;
    cfg.ranks = FctnRankTable::uniform(3, 2);
    cfg.max_iters = 5;
    cfg.init_seed = 73;

    FctnResult cold = fctn_complete(t, mask, cfg);
    FctnResult warm = fctn_complete(t, mask, cfg, apply_mask(t, mask));
    CHECK(max_diff(cold.x, warm.x) == 0.0);

    DenseTensor far = DenseTensor::constant(dims, 3.0);
    FctnResult other = fctn_complete(t, mask, cfg, far);
    for (std::int64_t i = 0; i < t.size(); ++i) {
        if (mask.observed(i)) {
            CHECK(other.x[i] == t[i]);
        }
    }
}

TEST_CASE("config and input validation") {
    FctnConfig cfg;
    cfg.ranks = FctnRankTable::uniform(3, 2);
    cfg.rho = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.rho = 0.1;
    cfg.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    FctnConfig ok;
    ok.ranks = FctnRankTable::uniform(3, 2);
    DenseTensor t = testdata::random_tensor({4, 4, 3}, 81);
    ObservationMask none = ObservationMask::empty(t.dims());
    CHECK_THROWS_AS((void)fctn_complete(t, none, ok), std::invalid_argument);
    DenseTensor flat = testdata::random_tensor({4, 4}, 82);
    CHECK_THROWS_AS((void)fctn_complete(flat, ObservationMask::full({4, 4}), ok), std::invalid_argument);
}
