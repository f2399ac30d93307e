#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "tsdlab/adapters.hpp"
#include "tsdlab/spectral.hpp"

using namespace tsdlab;

namespace {

Matrix random_matrix(int n, int m, std::uint64_t seed) {
    Rng rng(seed);
    return Matrix::gaussian(n, m, rng);
}

}  // namespace

TEST_SUITE("adapters") {

TEST_CASE("random init: zero effective delta, determinism, bound") {
    LoraCore c1 = lora_random_init(4, 4, 2, 2.0, 99);
    LoraCore c2 = lora_random_init(4, 4, 2, 2.0, 99);
    CHECK(max_abs_diff(c1.a, c2.a) == 0.0);
    CHECK(frob_norm(c1.b) == 0.0);

    AdapterState s = make_lora_state(random_matrix(4, 4, 1), 2, 2.0, 99);
    CHECK(frob_norm(effective_delta(s)) == 0.0);

    const double bound = std::sqrt(6.0 / 25.0);
    int samples = 0;
    for (std::uint64_t seed = 0; samples < 10000; ++seed) {
        LoraCore c = lora_random_init(25, 8, 4, 4.0, seed);
        for (double x : c.a.data()) {
            CHECK(std::abs(x) <= bound);
            ++samples;
        }
    }
    CHECK_THROWS_AS(lora_random_init(4, 4, 5, 1.0, 0), InvalidArgument);
}

TEST_CASE("effective delta of a dash coordinate is a scaled rank-one matrix") {
    Matrix w = random_matrix(6, 8, 7);
    SvdFactors f = svd(w);
    AdapterState s = make_dash_state(w, 2, 2.0, 3);
    ChangeRates cr = change_rates(f, random_matrix(6, 8, 8));
    s = enter_dash_phase(std::move(s), f, cr, 3);
    for (double& x : s.core.a.data()) x = 0.0;  // isolate the dash term
    s.dash->dsigma[0] = 0.3;

    // oracle: explicit rank-one outer product of the launched direction
    int launched = s.dash->indices[0];
    Matrix expect = outer(f.u.col(launched), f.vt.row(launched));
    for (double& x : expect.data()) x *= 0.3;
    CHECK(max_abs_diff(effective_delta(s), expect) <= 1e-15);
    CHECK(frob_norm(effective_delta(s)) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("dash term carries no alpha/r scaling") {
    Matrix w = random_matrix(5, 5, 17);
    SvdFactors f = svd(w);
    AdapterState s = make_dash_state(w, 2, 16.0, 3);  // alpha/r = 8
    s = enter_dash_phase(std::move(s), f, change_rates(f, random_matrix(5, 5, 18)), 2);
    for (double& x : s.core.a.data()) x = 0.0;
    s.dash->dsigma[0] = 1.0;
    CHECK(frob_norm(effective_delta(s)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("merged weight of a fresh lora state is the base exactly") {
    Matrix w = random_matrix(6, 9, 11);
    AdapterState s = make_lora_state(w, 3, 3.0, 5);
    CHECK(max_abs_diff(merged_weight(s), w) == 0.0);
}

TEST_CASE("fresh tsd split state reproduces the base weight") {
    Matrix w = random_matrix(8, 6, 23);
    SvdFactors f = svd(w);
    AdapterState s = make_init_state(w, f, {0, 2, 5}, 3.0);  // alpha = r = 3
    CHECK(frob_norm(sub(merged_weight(s), w)) <= 1e-10 * std::max(1.0, frob_norm(w)));
}

TEST_CASE("setting one dash coordinate moves the merge by a unit-norm step") {
    Matrix w = random_matrix(7, 7, 31);
    SvdFactors f = svd(w);
    AdapterState s = make_dash_state(w, 2, 2.0, 9);
    s = enter_dash_phase(std::move(s), f, change_rates(f, random_matrix(7, 7, 32)), 4);
    Matrix before = merged_weight(s);
    s.dash->dsigma[0] = 1.0;
    CHECK(frob_norm(sub(merged_weight(s), before)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("init split on a diagonal matrix, computed by hand") {
    Matrix w(3, 3, {3, 0, 0, 0, 2, 0, 0, 0, 1});
    SvdFactors f = svd(w);
    InitSplit split = tsd_init_split(w, f, {2});
    Matrix w_res_expect(3, 3, {3, 0, 0, 0, 2, 0, 0, 0, 0});
    Matrix ab_expect(3, 3, {0, 0, 0, 0, 0, 0, 0, 0, 1});
    CHECK(max_abs_diff(split.w_res, w_res_expect) <= 1e-12);
    CHECK(max_abs_diff(matmul(split.a0, split.b0), ab_expect) <= 1e-12);
}

TEST_CASE("init split over all directions leaves a negligible residual") {
    Matrix w = random_matrix(6, 6, 41);
    SvdFactors f = svd(w);
    InitSplit split = tsd_init_split(w, f, {0, 1, 2, 3, 4, 5});
    CHECK(frob_norm(split.w_res) <= 1e-10 * frob_norm(w));
    CHECK(frob_norm(sub(add(split.w_res, matmul(split.a0, split.b0)), w)) <= 1e-10 * frob_norm(w));
}

TEST_CASE("init split validates its index list") {
    Matrix w = random_matrix(4, 4, 43);
    SvdFactors f = svd(w);
    CHECK_THROWS_AS(tsd_init_split(w, f, {}), InvalidArgument);
    CHECK_THROWS_AS(tsd_init_split(w, f, {1, 1}), InvalidArgument);
    CHECK_THROWS_AS(tsd_init_split(w, f, {4}), InvalidArgument);
}

TEST_CASE("entering the dash phase changes nothing for method dash") {
    Matrix w = random_matrix(6, 10, 51);
    SvdFactors f = svd(w);
    AdapterState s = make_dash_state(w, 2, 2.0, 5);
    // give the pre-launch core some progress first
    for (double& x : s.core.b.data()) x = 0.01;
    Matrix before = merged_weight(s);
    s = enter_dash_phase(std::move(s), f, change_rates(f, effective_delta(s)), 4);
    CHECK(max_abs_diff(merged_weight(s), before) == 0.0);
    CHECK(s.phase == Phase::dash);
    CHECK(s.dash->indices.size() == 4);
}

TEST_CASE("tsd phase switch discards pre-launch progress and restores the base") {
    Matrix w = random_matrix(8, 12, 61);
    SvdFactors f = svd(w);
    AdapterState s = make_tsd_state(w, 3, 3.0, 5);  // alpha = r
    for (double& x : s.core.b.data()) x = 0.05;     // pre-launch progress
    s = enter_dash_phase(std::move(s), f, change_rates(f, effective_delta(s)), 8);
    CHECK(frob_norm(sub(merged_weight(s), w)) <= 1e-10 * frob_norm(w));
    CHECK(s.split_indices.size() == 3);
    CHECK(s.dash->indices.size() == 8);
}

TEST_CASE("enter_dash_phase rejects wrong method or phase") {
    Matrix w = random_matrix(4, 4, 71);
    SvdFactors f = svd(w);
    ChangeRates cr = change_rates(f, random_matrix(4, 4, 72));
    AdapterState lora = make_lora_state(w, 2, 2.0, 1);
    CHECK_THROWS_AS(enter_dash_phase(std::move(lora), f, cr, 2), InvalidState);
    AdapterState dash = make_dash_state(w, 2, 2.0, 1);
    dash = enter_dash_phase(std::move(dash), f, cr, 2);
    CHECK_THROWS_AS(enter_dash_phase(std::move(dash), f, cr, 2), InvalidState);
}

TEST_CASE("effective delta is linear in a, b, and dsigma") {
    Matrix w = random_matrix(6, 8, 81);
    SvdFactors f = svd(w);
    AdapterState s = make_dash_state(w, 2, 4.0, 3);
    s = enter_dash_phase(std::move(s), f, change_rates(f, random_matrix(6, 8, 82)), 4);
    Rng rng(83);
    for (double& x : s.core.a.data()) x = rng.normal();
    for (double& x : s.core.b.data()) x = rng.normal();
    for (double& x : s.dash->dsigma) x = rng.normal();

    // directional probes: delta(p + t*d) - delta(p) must equal t * (delta(p + d) - delta(p))
    auto probe = [&](auto&& mutate) {
        Matrix base_delta = effective_delta(s);
        AdapterState s1 = s, s2 = s;
        mutate(s1, 1.0);
        mutate(s2, 0.5);
        Matrix d1 = sub(effective_delta(s1), base_delta);
        Matrix d2 = sub(effective_delta(s2), base_delta);
        CHECK(max_abs_diff(scale(d1, 0.5), d2) <= 1e-12 * std::max(1.0, frob_norm(d1)));
    };
    probe([](AdapterState& st, double t) { st.core.a(1, 1) += 0.7 * t; });
    probe([](AdapterState& st, double t) { st.core.b(0, 3) += 1.3 * t; });
    probe([](AdapterState& st, double t) { st.dash->dsigma[2] += 0.9 * t; });
}

TEST_CASE("adapter state round-trips through its directory format") {
    auto dir = std::filesystem::temp_directory_path() / "tsdlab_state_rt";
    std::filesystem::remove_all(dir);

    Matrix w = random_matrix(6, 9, 91);
    SvdFactors f = svd(w);
    AdapterState s = make_tsd_state(w, 2, 4.0, 7);
    for (double& x : s.core.b.data()) x = 0.02;
    s = enter_dash_phase(std::move(s), f, change_rates(f, effective_delta(s)), 5);
    s.dash->dsigma[1] = -0.25;

    save_adapter(s, dir);
    AdapterState back = load_adapter(dir);
    CHECK(back.method == s.method);
    CHECK(back.phase == s.phase);
    CHECK(back.core.rank == s.core.rank);
    CHECK(back.core.alpha == s.core.alpha);
    CHECK(back.split_indices == s.split_indices);
    CHECK(back.dash->indices == s.dash->indices);
    CHECK(back.dash->dsigma == s.dash->dsigma);
    CHECK(max_abs_diff(back.base, s.base) == 0.0);
    CHECK(max_abs_diff(back.core.a, s.core.a) == 0.0);
    CHECK(max_abs_diff(back.core.b, s.core.b) == 0.0);
    CHECK(max_abs_diff(back.dash->u_bar, s.dash->u_bar) == 0.0);
    CHECK(max_abs_diff(back.dash->v_bar, s.dash->v_bar) == 0.0);
    CHECK(max_abs_diff(merged_weight(back), merged_weight(s)) == 0.0);

    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
