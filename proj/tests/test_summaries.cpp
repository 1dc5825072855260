#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nervepp/simulate.hpp"
#include "nervepp/summaries.hpp"

using namespace nervepp;

namespace {

constexpr double kPi = 3.14159265358979323846;

} // namespace

// ---------------------------------------------------------------------------
// K and centered L
// ---------------------------------------------------------------------------

TEST_CASE("two-point K with translation correction, by hand", "[summaries]") {
    // Unit square, points (0.2,0.2) and (0.4,0.2). The shifted-window overlap
    // is 0.8 for both ordered pairs, so
    //   K(0.25) = (1/4) * (1/0.8 + 1/0.8) = 0.625.
    const PointPattern p({{0.2, 0.2}, {0.4, 0.2}}, Window(0, 0, 1, 1));
    const SummaryCurve K = estimate_K(p, {0.25});
    REQUIRE(K.size() == 1);
    CHECK(K.values[0] == Catch::Approx(0.625).margin(1e-12));
    CHECK(K.kind == CurveKind::K);
}

TEST_CASE("K is zero below the minimum interpoint distance", "[summaries]") {
    const PointPattern p({{0.2, 0.2}, {0.4, 0.2}}, Window(0, 0, 1, 1));
    const SummaryCurve K = estimate_K(p, {0.05, 0.1});
    CHECK(K.values[0] == 0.0);
    CHECK(K.values[1] == 0.0);
}

TEST_CASE("K estimate input checks", "[summaries]") {
    const Window w(0, 0, 1, 1);
    CHECK_THROWS_AS(estimate_K(PointPattern({{0.5, 0.5}}, w), {0.1}), data_error);
    const PointPattern two({{0.2, 0.2}, {0.4, 0.2}}, w);
    CHECK_THROWS_AS(estimate_K(two, {1.0}), data_error);  // grid max = window size
    CHECK_THROWS_AS(estimate_K(two, {-0.1, 0.2}), data_error);
    CHECK_THROWS_AS(estimate_K(two, {}), data_error);
    // opposite corners: the shifted windows no longer overlap
    const PointPattern corners({{0.0, 0.5}, {1.0, 0.5}}, w);
    CHECK_THROWS_AS(estimate_K(corners, {0.1}), numeric_error);
}

TEST_CASE("K is invariant under translation and reflection", "[summaries]") {
    Rng rng(88);
    std::vector<Point> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({rng.uniform(0, 2), rng.uniform(0, 3)});
    const std::vector<double> grid{0.1, 0.3, 0.5, 0.8};
    const SummaryCurve base = estimate_K(PointPattern(pts, Window(0, 0, 2, 3)), grid);

    std::vector<Point> shifted;
    for (const Point& p : pts) shifted.push_back({p.x + 10, p.y - 4});
    const SummaryCurve moved = estimate_K(PointPattern(shifted, Window(10, -4, 12, -1)), grid);

    std::vector<Point> mirrored;
    for (const Point& p : pts) mirrored.push_back({2.0 - p.x, p.y});
    const SummaryCurve flipped = estimate_K(PointPattern(mirrored, Window(0, 0, 2, 3)), grid);

    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(moved.values[i] == Catch::Approx(base.values[i]).epsilon(1e-12));
        CHECK(flipped.values[i] == Catch::Approx(base.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("centered L transform", "[summaries]") {
    SECTION("Poisson reference maps to zero") {
        const std::vector<double> grid{0.5, 1.0, 2.0};
        std::vector<double> k(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) k[i] = kPi * grid[i] * grid[i];
        const SummaryCurve L = centered_L(SummaryCurve(grid, k, CurveKind::K));
        for (double v : L.values) CHECK(v == Catch::Approx(0.0).margin(1e-12));
        CHECK(L.kind == CurveKind::L_centered);
    }
    SECTION("hand value at the two-point K") {
        const SummaryCurve L = centered_L(SummaryCurve({0.25}, {0.625}, CurveKind::K));
        CHECK(L.values[0] == Catch::Approx(std::sqrt(0.625 / kPi) - 0.25).epsilon(1e-12));
        CHECK(L.values[0] == Catch::Approx(0.1960).margin(5e-4));
    }
    SECTION("zero K maps to minus r") {
        const SummaryCurve L = centered_L(SummaryCurve({1.0, 2.0}, {0.0, 0.0}, CurveKind::K));
        CHECK(L.values[0] == -1.0);
        CHECK(L.values[1] == -2.0);
    }
    SECTION("missing values pass through") {
        const SummaryCurve L =
            centered_L(SummaryCurve({1.0, 2.0}, {missing_value(), kPi * 4.0}, CurveKind::K));
        CHECK(is_missing(L.values[0]));
        CHECK(L.values[1] == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("negative K is rejected") {
        CHECK_THROWS_AS(centered_L(SummaryCurve({1.0}, {-0.1}, CurveKind::K)), data_error);
    }
    SECTION("only K curves are accepted") {
        CHECK_THROWS_AS(centered_L(SummaryCurve({1.0}, {0.5}, CurveKind::F)), data_error);
    }
}

// ---------------------------------------------------------------------------
// Pooling
// ---------------------------------------------------------------------------

TEST_CASE("square point number weights", "[summaries]") {
    CHECK(square_point_weights({1, 2}).weights == std::vector<double>{0.2, 0.8});
    const PoolingWeights even = square_point_weights({5, 5, 5});
    for (double w : even.weights) CHECK(w == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    const PoolingWeights w34 = square_point_weights({3, 4});
    CHECK(w34.weights[0] == Catch::Approx(9.0 / 25.0).epsilon(1e-15));
    CHECK(w34.weights[1] == Catch::Approx(16.0 / 25.0).epsilon(1e-15));
    CHECK_THROWS_AS(square_point_weights({0, 0}), data_error);
    // zero counts are fine as long as one is positive
    CHECK(square_point_weights({0, 2}).weights == std::vector<double>{0.0, 1.0});
}

TEST_CASE("pooling weights must be a distribution", "[summaries]") {
    CHECK_THROWS_AS(PoolingWeights({0.5, 0.4}), data_error);
    CHECK_THROWS_AS(PoolingWeights({-0.5, 1.5}), data_error);
    CHECK_NOTHROW(PoolingWeights({0.25, 0.75}));
}

TEST_CASE("pool_curves", "[summaries]") {
    const std::vector<double> grid{0.0, 1.0, 2.0};

    SECTION("two identical curves pool to themselves") {
        const SummaryCurve c(grid, {1.0, 2.0, 3.0}, CurveKind::K);
        const SummaryCurve pooled = pool_curves({c, c}, PoolingWeights({0.3, 0.7}));
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(pooled.values[i] == Catch::Approx(c.values[i]).epsilon(1e-15));
    }
    SECTION("constant 0 and 1 curves with weights (0.2, 0.8)") {
        const SummaryCurve zero(grid, {0, 0, 0}, CurveKind::K);
        const SummaryCurve one(grid, {1, 1, 1}, CurveKind::K);
        const SummaryCurve pooled = pool_curves({zero, one}, PoolingWeights({0.2, 0.8}));
        for (double v : pooled.values) CHECK(v == Catch::Approx(0.8).epsilon(1e-15));
    }
    SECTION("three curves against the direct weighted sum") {
        Rng rng(314);
        std::vector<SummaryCurve> curves;
        for (int c = 0; c < 3; ++c) {
            std::vector<double> vals;
            for (std::size_t i = 0; i < grid.size(); ++i) vals.push_back(rng.uniform(-5, 5));
            curves.emplace_back(grid, vals, CurveKind::K);
        }
        const std::vector<double> w{0.5, 0.3, 0.2};
        const SummaryCurve pooled = pool_curves(curves, PoolingWeights(w));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double direct = w[0] * curves[0].values[i] + w[1] * curves[1].values[i] +
                                  w[2] * curves[2].values[i];
            CHECK(pooled.values[i] == Catch::Approx(direct).epsilon(1e-14));
        }
    }
    SECTION("missing values renormalize the remaining weights") {
        const SummaryCurve a(grid, {2.0, missing_value(), missing_value()}, CurveKind::K);
        const SummaryCurve b(grid, {4.0, 6.0, missing_value()}, CurveKind::K);
        const SummaryCurve pooled = pool_curves({a, b}, PoolingWeights({0.5, 0.5}));
        CHECK(pooled.values[0] == Catch::Approx(3.0));
        CHECK(pooled.values[1] == Catch::Approx(6.0)); // only b contributes
        CHECK(is_missing(pooled.values[2]));           // nobody contributes
    }
    SECTION("grid or kind mismatch is an error") {
        const SummaryCurve a(grid, {1, 2, 3}, CurveKind::K);
        const SummaryCurve other({0.0, 1.0, 2.5}, {1, 2, 3}, CurveKind::K);
        CHECK_THROWS_AS(pool_curves({a, other}, PoolingWeights({0.5, 0.5})), data_error);
        const SummaryCurve wrong_kind(grid, {1, 2, 3}, CurveKind::F);
        CHECK_THROWS_AS(pool_curves({a, wrong_kind}, PoolingWeights({0.5, 0.5})), data_error);
        CHECK_THROWS_AS(pool_curves({a}, PoolingWeights({0.5, 0.5})), data_error);
        CHECK_THROWS_AS(pool_curves({}, PoolingWeights({1.0})), data_error);
    }
}

TEST_CASE("two-stage pooling equals the direct hierarchical estimator", "[summaries]") {
    // three samples, two subjects; pooling samples->subject then subjects->group
    // with square point number weights must reproduce the flat formula
    //   sum_i n_i^2 K_i / sum n_k^2   when every subject's weights renormalize
    const std::vector<double> grid{1.0, 2.0};
    const SummaryCurve k1(grid, {1.0, 10.0}, CurveKind::K);
    const SummaryCurve k2(grid, {2.0, 20.0}, CurveKind::K);
    const SummaryCurve k3(grid, {3.0, 30.0}, CurveKind::K);
    const std::vector<std::size_t> n{3, 4, 5}; // k1,k2 subject A; k3 subject B

    const SummaryCurve subjA = pool_with_square_weights({k1, k2}, {n[0], n[1]});
    const SummaryCurve group = pool_with_square_weights({subjA, k3}, {n[0] + n[1], n[2]});

    // direct: subject A combines with 9/25, 16/25; subjects combine with 49/74, 25/74
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double a = (9.0 * k1.values[i] + 16.0 * k2.values[i]) / 25.0;
        const double expect = (49.0 * a + 25.0 * k3.values[i]) / 74.0;
        CHECK(group.values[i] == Catch::Approx(expect).epsilon(1e-14));
    }
}

// ---------------------------------------------------------------------------
// Mark correlation
// ---------------------------------------------------------------------------

TEST_CASE("epanechnikov kernel", "[summaries]") {
    CHECK(epanechnikov(0.0, 2.0) == Catch::Approx(0.375)); // 0.75/b
    CHECK(epanechnikov(2.0, 2.0) == 0.0);                  // support edge
    CHECK(epanechnikov(-0.5, 1.0) == Catch::Approx(0.75 * 0.75));
    CHECK(epanechnikov(5.0, 1.0) == 0.0);
    // integrates to one (midpoint rule)
    double integral = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const double u = -1.0 + 2.0 * (i + 0.5) / n;
        integral += epanechnikov(u, 1.0) * (2.0 / n);
    }
    CHECK(integral == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("bandwidth rule of thumb on hand-computed distances", "[summaries]") {
    // points on a line; the 10 pairwise distances are
    //   1,2,4,8,1,3,7,2,6,4  (mean 3.8, sample sd sqrt(55.6/9))
    // quartiles by linear interpolation: q25 = 2, q75 = 5.5
    const PointPattern p({{0, 0}, {1, 0}, {2, 0}, {4, 0}, {8, 0}}, Window(0, 0, 100, 100));
    const double sd = std::sqrt(55.6 / 9.0);
    const double spread = std::min(sd, 3.5 / 1.34);
    const double expect = 0.9 * spread * std::pow(10.0, -0.2);
    CHECK(markcorr_bandwidth(p, 10.0) == Catch::Approx(expect).epsilon(1e-12));

    // too few close pairs to pick a bandwidth
    const PointPattern sparse({{0, 0}, {50, 50}}, Window(0, 0, 100, 100));
    CHECK_THROWS_AS(markcorr_bandwidth(sparse, 1.0), numeric_error);
}

TEST_CASE("mark correlation is one for constant marks", "[summaries]") {
    Rng rng(515);
    std::vector<Point> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
    const PointPattern p(pts, Window(0, 0, 100, 100));
    const MarkedPointPattern mp(p, std::vector<double>(30, 3.0));
    const SummaryCurve k = mark_correlation(mp, {5.0, 10.0, 20.0, 40.0});
    for (double v : k.values) {
        if (is_missing(v)) continue;
        CHECK(v == Catch::Approx(1.0).margin(1e-12));
    }
    CHECK(k.kind == CurveKind::markcorr);
}

TEST_CASE("two-point mark correlation equals the kernel ratio by hand", "[summaries]") {
    // one pair at distance 2 with marks 2 and 8: every weight cancels and
    //   k(2) = m1 m2 / mbar^2 = 4 m1 m2/(m1+m2)^2 = 0.64
    const PointPattern p({{2, 2}, {2, 4}}, Window(0, 0, 10, 10));
    const MarkedPointPattern mp(p, {2.0, 8.0});
    const SummaryCurve k = mark_correlation(mp, {2.0, 6.0}, 1.0);
    CHECK(k.values[0] == Catch::Approx(0.64).epsilon(1e-12));
    CHECK(is_missing(k.values[1])); // kernel has no mass 4 microns away
}

TEST_CASE("mark correlation near one for independent marks", "[summaries]") {
    // marks i.i.d. uniform: no spatial structure, so k(r) should average ~1
    Rng rng(626);
    const Window w(0, 0, 1, 1);
    const std::vector<double> grid{0.08, 0.10, 0.12};
    double acc = 0.0;
    int used = 0;
    for (int sim = 0; sim < 50; ++sim) {
        const PointPattern p = simulate_poisson(100.0, w, rng);
        if (p.size() < 10) continue;
        std::vector<double> marks(p.size());
        for (double& m : marks) m = rng.uniform();
        const SummaryCurve k = mark_correlation(MarkedPointPattern(p, marks), grid);
        if (is_missing(k.values[1])) continue;
        acc += k.values[1];
        ++used;
    }
    REQUIRE(used >= 45);
    CHECK(acc / used == Catch::Approx(1.0).margin(0.1));
}

TEST_CASE("mark correlation error cases", "[summaries]") {
    const Window w(0, 0, 10, 10);
    const PointPattern p({{2, 2}, {2, 4}}, w);
    // mark mean zero
    CHECK_THROWS_AS(mark_correlation(MarkedPointPattern(p, {1.0, -1.0}), {2.0}),
                    numeric_error);
    // nonpositive bandwidth
    CHECK_THROWS_AS(mark_correlation(MarkedPointPattern(p, {1.0, 2.0}), {2.0}, 0.0),
                    data_error);
    CHECK_THROWS_AS(mark_correlation(MarkedPointPattern(p, {1.0, 2.0}), {2.0}, -1.0),
                    data_error);
    // fewer than two points
    const PointPattern single({{2, 2}}, w);
    CHECK_THROWS_AS(mark_correlation(MarkedPointPattern(single, {1.0}), {2.0}), data_error);
}

// ---------------------------------------------------------------------------
// Empty space function and its scalar summary
// ---------------------------------------------------------------------------

TEST_CASE("empty space function of a centered point saturates", "[summaries]") {
    // r = 0.4 erodes the unit square to [0.4,0.6]^2, whose farthest corner is
    // only ~0.141 from the center point, so every eligible test point is a hit
    const PointPattern p({{0.5, 0.5}}, Window(0, 0, 1, 1));
    FConfig cfg;
    cfg.n_test_points = 500;
    cfg.grid = {0.4};
    Rng rng(11);
    const SummaryCurve F = empty_space_F(p, cfg, rng);
    CHECK(F.values[0] == 1.0);
    CHECK(F.kind == CurveKind::F);
}

TEST_CASE("empty space function of an empty pattern is zero with a warning", "[summaries]") {
    const PointPattern p({}, Window(0, 0, 1, 1));
    FConfig cfg;
    cfg.n_test_points = 100;
    cfg.grid = {0.1, 0.2};
    Rng rng(12);
    const SummaryCurve F = empty_space_F(p, cfg, rng);
    CHECK(F.values == std::vector<double>{0.0, 0.0});
    CHECK(F.warning.has_value());
}

TEST_CASE("empty space function is monotone and in [0,1]", "[summaries]") {
    Rng rng(13);
    const Window w(0, 0, 100, 100);
    const PointPattern p = simulate_poisson(0.005, w, rng);
    FConfig cfg;
    cfg.n_test_points = 2000;
    cfg.grid = linear_grid(0.0, 30.0, 31);
    const SummaryCurve F = empty_space_F(p, cfg, rng);
    double prev = -1.0;
    for (double v : F.values) {
        REQUIRE_FALSE(is_missing(v));
        CHECK(v >= prev);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        prev = v;
    }
}

TEST_CASE("empty space function matches the Poisson closed form", "[summaries]") {
    // mean F(r) over simulations vs 1 - exp(-lambda pi r^2)
    const double lambda = 100.0;
    const Window w(0, 0, 1, 1);
    FConfig cfg;
    cfg.n_test_points = 2000;
    cfg.grid = {0.01, 0.02, 0.03, 0.04, 0.05};
    Rng rng(14);
    const int sims = 500;
    std::vector<double> acc(cfg.grid.size(), 0.0);
    for (int s = 0; s < sims; ++s) {
        const PointPattern p = simulate_poisson(lambda, w, rng);
        const SummaryCurve F = empty_space_F(p, cfg, rng);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += F.values[i];
    }
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        const double r = cfg.grid[i];
        const double expect = 1.0 - std::exp(-lambda * kPi * r * r);
        CHECK(acc[i] / sims == Catch::Approx(expect).margin(0.02));
    }
}

TEST_CASE("empty space function input checks", "[summaries]") {
    const PointPattern p({{0.5, 0.5}}, Window(0, 0, 1, 1));
    Rng rng(15);
    FConfig cfg;
    cfg.grid = {0.6}; // erosion eats the whole window
    CHECK_THROWS_AS(empty_space_F(p, cfg, rng), data_error);
    cfg.grid = {};
    CHECK_THROWS_AS(empty_space_F(p, cfg, rng), data_error);
    cfg.grid = {-0.1, 0.1};
    CHECK_THROWS_AS(empty_space_F(p, cfg, rng), data_error);
}

TEST_CASE("scalar summary equals a threshold scan of the curve", "[summaries]") {
    const Window w(0, 0, 330, 432);
    FConfig cfg;
    cfg.n_test_points = 2000;
    cfg.grid = linear_grid(0.0, 50.0, 51);

    for (std::uint64_t seed : {101, 202, 303, 404, 505}) {
        Rng sim_rng(seed);
        const PointPattern p = simulate_poisson(1.5e-4, w, sim_rng);
        if (p.size() == 0) continue;

        // identical seed on both sides -> identical test point set
        Rng rng_summary(seed * 7 + 1);
        Rng rng_curve(seed * 7 + 1);
        double expected = missing_value();
        const SummaryCurve F = empty_space_F(p, cfg, rng_curve);
        for (std::size_t i = 0; i < F.size(); ++i) {
            if (!is_missing(F.values[i]) && F.values[i] >= 0.3) {
                expected = F.grid[i];
                break;
            }
        }
        if (is_missing(expected)) {
            CHECK_THROWS_AS(abc_summary(p, cfg, rng_summary), numeric_error);
        } else {
            CHECK(abc_summary(p, cfg, rng_summary) == expected);
        }
    }
}

TEST_CASE("scalar summary on a dense lattice hits the first grid value", "[summaries]") {
    // every location lies within ~0.71 of a lattice point, so F(1) = 1 and the
    // summary is the first grid r with F >= 0.3
    std::vector<Point> pts;
    for (int x = 0; x < 20; ++x)
        for (int y = 0; y < 20; ++y) pts.push_back({x + 0.5, y + 0.5});
    const PointPattern p(pts, Window(0, 0, 20, 20));
    FConfig cfg;
    cfg.n_test_points = 1000;
    cfg.grid = {0.0, 0.5, 1.0, 1.5, 2.0};
    Rng rng(909);
    const double s = abc_summary(p, cfg, rng);
    CHECK((s == 0.5 || s == 1.0)); // F(0.5) = pi/4 of each cell ~ 0.785 >= 0.3
    Rng rng2(909);
    const SummaryCurve F = empty_space_F(p, cfg, rng2);
    for (std::size_t i = 0; i < F.size(); ++i)
        if (F.values[i] >= 0.3) {
            CHECK(s == F.grid[i]);
            break;
        }
}

TEST_CASE("scalar summary errors when the threshold is unreachable", "[summaries]") {
    const PointPattern p({{0.0, 0.0}}, Window(0, 0, 100, 100));
    FConfig cfg;
    cfg.n_test_points = 500;
    cfg.grid = linear_grid(0.0, 10.0, 11);
    Rng rng(77);
    CHECK_THROWS_WITH(abc_summary(p, cfg, rng),
                      Catch::Matchers::ContainsSubstring("summary undefined"));

    const PointPattern empty({}, Window(0, 0, 100, 100));
    Rng rng2(78);
    CHECK_THROWS_AS(abc_summary(empty, cfg, rng2), numeric_error);
}
