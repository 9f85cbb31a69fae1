#include <cmath>
#include <set>

#include "doctest.h"

#include "clutterscope/scenario.hpp"

using namespace clutterscope;

namespace {

ScenarioSpec spec_for(Model model, int hyp, std::vector<int> edges = {}) {
    ScenarioSpec s;
    s.model = model;
    s.hypothesis = hyp;
    s.edges = std::move(edges);
    return s;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("primary clutter matrix") {
    ClutterBasis single;
    single.angles_deg = {0.0};
    single.cnr_db = 0.0;
    const PrimaryClutter one = build_primary_clutter(single);
    const CVector v = steering_vector(0.0, single.n);
    CHECK((one.m - v * v.adjoint()).norm() < 1e-14);
    CHECK(one.eig.values(0) == doctest::Approx(1.0));
    CHECK(one.eig.values.tail(single.n - 1).cwiseAbs().maxCoeff() < 1e-12);

    const ClutterBasis basis;
    const PrimaryClutter m = build_primary_clutter(basis);
    CHECK(m.m.trace().real() == doctest::Approx(3000.0).epsilon(1e-12));
    CHECK(m.eig.values.minCoeff() >= -1e-10 * m.m.trace().real());
    // Rank equals the number of distinct angles.
    CHECK(m.eig.values(2) > 1.0);
    CHECK(std::abs(m.eig.values(3)) < 1e-9);
}

TEST_CASE("basis and spec validation") {
    ClutterBasis b;
    b.angles_deg = {0.0, 0.0};
    CHECK_THROWS_AS(b.validate(), InvalidInput);
    b.angles_deg = {};
    CHECK_THROWS_AS(b.validate(), InvalidInput);

    CHECK_NOTHROW(spec_for(Model::kOne, 0).validate());
    CHECK_THROWS_AS(spec_for(Model::kOne, 4).validate(), InvalidInput);
    CHECK_THROWS_AS(spec_for(Model::kOne, 2).validate(), InvalidInput);          // missing edge
    CHECK_THROWS_AS(spec_for(Model::kOne, 2, {2}).validate(), InvalidInput);     // below r
    CHECK_THROWS_AS(spec_for(Model::kOne, 2, {30}).validate(), InvalidInput);    // above K_S - r
    CHECK_NOTHROW(spec_for(Model::kOne, 2, {3}).validate());
    CHECK_NOTHROW(spec_for(Model::kOne, 2, {29}).validate());
    CHECK_THROWS_AS(spec_for(Model::kOne, 3, {17, 20}).validate(), InvalidInput);
    CHECK_THROWS_AS(spec_for(Model::kOne, 3, {4, 16}).validate(), InvalidInput);
    CHECK_NOTHROW(spec_for(Model::kOne, 3, {16, 17}).validate());
    CHECK_NOTHROW(spec_for(Model::kTwo, 4, {3}).validate());

    ScenarioSpec odd = spec_for(Model::kOne, 0);
    odd.ks = 31;
    CHECK_THROWS_AS(odd.validate(), InvalidInput);
    ScenarioSpec small = spec_for(Model::kOne, 0);
    small.kp = 3;
    CHECK_THROWS_AS(small.validate(), InvalidInput);
}

TEST_CASE("gamma profiles") {
    RngStream rng(5, 0);
    for (int i = 0; i < 2000; ++i) {
        const double delta = -1.0 + 0.002 * i;
        const RVector g = draw_gamma_profile(delta, 4, rng);
        for (int k = 0; k < 4; ++k) {
            CHECK(g(k) > 0.0);
            CHECK(g(k) < std::pow(10.0, delta));
            if (k > 0) {
                CHECK(g(k - 1) >= g(k));
            }
        }
    }

    // Largest of three uniforms has mean 3/4.
    double sum = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        sum += draw_gamma_profile(0.0, 3, rng)(0);
    }
    CHECK(std::abs(sum / draws - 0.75) < 0.01);

    // r = 1, delta = 0: plain U(0, 1).
    double m1 = 0.0;
    for (int i = 0; i < draws; ++i) {
        m1 += draw_gamma_profile(0.0, 1, rng)(0);
    }
    CHECK(std::abs(m1 / draws - 0.5) < 0.01);
}

TEST_CASE("segment layouts") {
    using T = SegmentTag;
    CHECK(segment_layout(spec_for(Model::kOne, 2, {25})) ==
          SegmentLayout{{1, 25, T::kPrimary}, {26, 32, T::kAlt1}});
    CHECK(segment_layout(spec_for(Model::kOne, 2, {10})) ==
          SegmentLayout{{1, 10, T::kAlt1}, {11, 32, T::kPrimary}});
    CHECK(segment_layout(spec_for(Model::kOne, 2, {16})) ==
          SegmentLayout{{1, 16, T::kAlt1}, {17, 32, T::kPrimary}});
    CHECK(segment_layout(spec_for(Model::kOne, 0)) == SegmentLayout{{1, 32, T::kPrimary}});
    CHECK(segment_layout(spec_for(Model::kTwo, 1)) == SegmentLayout{{1, 32, T::kAlt1}});
    CHECK(segment_layout(spec_for(Model::kOne, 3, {4, 20})) ==
          SegmentLayout{{1, 4, T::kAlt1}, {5, 20, T::kPrimary}, {21, 32, T::kAlt2}});
    CHECK(segment_layout(spec_for(Model::kTwo, 4, {7})) ==
          SegmentLayout{{1, 7, T::kAlt1}, {8, 32, T::kAlt2}});
    CHECK_THROWS_AS(segment_layout(spec_for(Model::kTwo, 4, {31})), InvalidInput);
}

TEST_CASE("segment layouts partition the secondary window") {
    RngStream rng(6, 0);
    for (int t = 0; t < 500; ++t) {
        ScenarioSpec s;
        s.model = t % 2 ? Model::kOne : Model::kTwo;
        s.ks = 2 * static_cast<int>(rng.uniform_int(4, 30));
        s.hypothesis = static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(hypothesis_count(s.model) - 1)));
        s.edges = draw_random_edges(s, rng);
        const SegmentLayout layout = segment_layout(s);
        int next = 1;
        for (const Segment& seg : layout) {
            CHECK(seg.start == next);
            CHECK(seg.end >= seg.start);
            next = seg.end + 1;
        }
        CHECK(next == s.ks + 1);
    }
}

TEST_CASE("random edges stay in their admissible ranges") {
    RngStream rng(7, 0);
    std::set<int> seen;
    for (int t = 0; t < 3000; ++t) {
        const auto e = draw_random_edges(spec_for(Model::kOne, 3, {4, 20}), rng);
        REQUIRE(e.size() == 2);
        CHECK((e[0] >= 3 && e[0] <= 16));
        CHECK((e[1] >= 17 && e[1] <= 29));
        seen.insert(e[0]);
    }
    CHECK(seen.size() == 14);
}

TEST_CASE("model 1 alternative covariances share the primary eigenvectors") {
    const PrimaryClutter p = build_primary_clutter(ClutterBasis{});
    RngStream rng(8, 0);
    for (int t = 0; t < 20; ++t) {
        const RVector g = draw_gamma_profile(rng.uniform01() * 3.0, 3, rng);
        const EigenSystem alt = model1_alt_covariance(p.eig, g, 3, 1.0);
        CHECK((alt.vectors - p.eig.vectors).norm() == 0.0);
        RVector scaled = RVector::Zero(9);
        for (int i = 0; i < 3; ++i) {
            scaled(i) = g(i) * p.eig.values(i);
        }
        const CMatrix ml = alt.vectors * (alt.values.array() - 1.0).matrix().asDiagonal() * alt.vectors.adjoint();
        const CMatrix want = p.eig.vectors * scaled.asDiagonal() * p.eig.vectors.adjoint();
        CHECK((ml - want).norm() <= 1e-12 * (1.0 + want.norm()));
    }
}

TEST_CASE("model 2 clutter power ratio bookkeeping") {
    const ClutterBasis basis;
    const CMatrix m = clutter_matrix(basis.angles_deg, basis.n, basis.clutter_power());
    for (double cpr : {-5.0, 0.0, 7.5, 20.0}) {
        ScenarioSpec s = spec_for(Model::kTwo, 1);
        s.cpr_db = cpr;
        const CMatrix r1 = clutter_matrix(basis.angles_deg, basis.n, model2_alt_power(s, 0));
        CHECK(10.0 * std::log10(r1.trace().real() / m.trace().real()) == doctest::Approx(cpr).epsilon(1e-9));
    }
    ScenarioSpec h3 = spec_for(Model::kTwo, 3, {8, 24});
    h3.beta = 0.5;
    CHECK(model2_alt_power(h3, 1) == doctest::Approx(0.5 * model2_alt_power(h3, 0)));
    ScenarioSpec h4 = spec_for(Model::kTwo, 4, {8});
    CHECK(model2_alt_power(h4, 1) == doctest::Approx(1.5 * model2_alt_power(h4, 0)));
}

TEST_CASE("synthesize_window determinism and segment placement") {
    ScenarioSpec s = spec_for(Model::kOne, 3, {4, 20});
    s.cpr_db = 5.0;
    RngStream a(9, 1), b(9, 1);
    const DataWindow wa = synthesize_window(s, a);
    const DataWindow wb = synthesize_window(s, b);
    CHECK(wa.zp == wb.zp);
    CHECK(wa.zs == wb.zs);
    REQUIRE(wa.truth.has_value());
    CHECK(wa.truth->edges == s.edges);
    CHECK(wa.n() == 9);
    CHECK(wa.kp() == 8);
    CHECK(wa.ks() == 32);

    // Changing the power ratio only changes the alternative bins; the primary
    // bins 5..20 and Z_P consume identical random draws.
    ScenarioSpec s2 = s;
    s2.cpr_db = 15.0;
    RngStream c(9, 1);
    const DataWindow wc = synthesize_window(s2, c);
    CHECK(wc.zp == wa.zp);
    CHECK(wc.zs.middleCols(4, 16) == wa.zs.middleCols(4, 16));
    CHECK(wc.zs.leftCols(4) != wa.zs.leftCols(4));
    CHECK(wc.zs.rightCols(12) != wa.zs.rightCols(12));
}

TEST_CASE("homogeneous synthesis matches the model covariance") {
    ScenarioSpec s = spec_for(Model::kOne, 0);
    s.kp = 2000;
    s.ks = 8000;
    RngStream rng(10, 0);
    const DataWindow w = synthesize_window(s, rng);
    const CMatrix cov = (gram(w.zp) + gram(w.zs)) / 10000.0;
    CMatrix want = build_primary_clutter(s.basis).m;
    want.diagonal().array() += 1.0;
    CHECK((cov - want).norm() <= 0.05 * want.norm());
}

}  // TEST_SUITE
