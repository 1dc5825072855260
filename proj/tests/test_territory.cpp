#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nervepp/rng.hpp"
#include "nervepp/territory.hpp"

using namespace nervepp;

namespace {

// signed doubled triangle area, for orientation checks
double orient(const Point& a, const Point& b, const Point& c) {
    return cross(a, b, c);
}

bool on_or_inside(const Polygon& poly, const Point& p) {
    const auto& v = poly.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % v.size()];
        if (orient(a, b, p) < -1e-9) return false;
    }
    return true;
}

} // namespace

TEST_CASE("convex hull of simple configurations", "[territory]") {
    SECTION("unit square corners plus center") {
        const HullResult h =
            convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}});
        REQUIRE_FALSE(h.degenerate());
        CHECK(h.polygon->vertices.size() == 4);
        CHECK(polygon_area(*h.polygon) == Catch::Approx(1.0).epsilon(1e-14));
    }
    SECTION("right triangle") {
        const HullResult h = convex_hull({{0, 0}, {4, 0}, {0, 3}});
        REQUIRE_FALSE(h.degenerate());
        CHECK(polygon_area(*h.polygon) == Catch::Approx(6.0).epsilon(1e-14));
    }
    SECTION("degenerate inputs") {
        CHECK(convex_hull({{1, 1}}).degenerate());
        CHECK(convex_hull({{1, 1}, {2, 2}}).degenerate());
        CHECK(convex_hull({{0, 0}, {1, 0}, {2, 0}}).degenerate()); // collinear
        CHECK(convex_hull({{1, 1}, {1, 1}, {1, 1}}).degenerate()); // repeated
        CHECK_THROWS_AS(convex_hull({}), data_error);
    }
}

TEST_CASE("convex hull properties on random inputs", "[territory]") {
    Rng rng(4242);
    for (int instance = 0; instance < 200; ++instance) {
        std::vector<Point> pts;
        for (int i = 0; i < 10; ++i) pts.push_back({rng.uniform(0, 1), rng.uniform(0, 1)});
        const HullResult h = convex_hull(pts);
        REQUIRE_FALSE(h.degenerate());
        const Polygon& poly = *h.polygon;

        // counterclockwise orientation and positive area
        CHECK(polygon_area(poly) > 0.0);
        for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
            const Point& a = poly.vertices[i];
            const Point& b = poly.vertices[(i + 1) % poly.vertices.size()];
            const Point& c = poly.vertices[(i + 2) % poly.vertices.size()];
            CHECK(orient(a, b, c) > 0.0); // strictly convex corners
        }
        // every input point lies inside or on the hull
        for (const Point& p : pts) CHECK(on_or_inside(poly, p));
        // every vertex is one of the inputs
        for (const Point& v : poly.vertices)
            CHECK(std::find(pts.begin(), pts.end(), v) != pts.end());
        // hull of the hull is the hull
        const HullResult h2 = convex_hull(poly.vertices);
        REQUIRE_FALSE(h2.degenerate());
        CHECK(polygon_area(*h2.polygon) ==
              Catch::Approx(polygon_area(poly)).epsilon(1e-12));
    }
}

TEST_CASE("convex hull is invariant under permutation and rigid motion", "[territory]") {
    Rng rng(777);
    std::vector<Point> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({rng.uniform(0, 5), rng.uniform(0, 5)});
    const double base_area = polygon_area(*convex_hull(pts).polygon);

    std::vector<Point> shuffled = pts;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[0], shuffled[5]);
    CHECK(polygon_area(*convex_hull(shuffled).polygon) ==
          Catch::Approx(base_area).epsilon(1e-12));

    const double c = std::cos(0.6), s = std::sin(0.6);
    std::vector<Point> moved;
    for (const Point& p : pts)
        moved.push_back({c * p.x - s * p.y + 100.0, s * p.x + c * p.y - 40.0});
    CHECK(polygon_area(*convex_hull(moved).polygon) ==
          Catch::Approx(base_area).epsilon(1e-9));
}

TEST_CASE("polygon area", "[territory]") {
    CHECK(polygon_area(Polygon{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}}) == Catch::Approx(1.0));
    CHECK(polygon_area(Polygon{{{0, 0}, {4, 0}, {0, 3}}}) == Catch::Approx(6.0));
    CHECK(polygon_area(Polygon{{{0, 0}, {1, 1}}}) == 0.0);
    CHECK(polygon_area(Polygon{{}}) == 0.0);
}

TEST_CASE("territory size of a tree", "[territory]") {
    SECTION("hull area when the ends span a polygon") {
        const NerveTree t{1, {1, 1}, {{0, 0}, {4, 0}, {0, 3}}};
        CHECK(territory_size(t) == Catch::Approx(6.0).epsilon(1e-14));
    }
    SECTION("distance fallback for a single end") {
        const NerveTree t{2, {0, 0}, {{3, 4}}};
        CHECK(territory_size(t) == Catch::Approx(5.0).epsilon(1e-14));
    }
    SECTION("distance fallback for collinear ends") {
        const NerveTree t{3, {0, 0}, {{1, 0}, {2, 0}}};
        CHECK(territory_size(t) == Catch::Approx(2.0).epsilon(1e-14));
    }
    SECTION("no ends is an error") {
        const NerveTree t{4, {0, 0}, {}};
        CHECK_THROWS_AS(territory_size(t), data_error);
    }
    SECTION("the base participates in the hull") {
        // base far outside the end triangle stretches the territory
        const NerveTree t{5, {10, 0}, {{0, 0}, {4, 0}, {0, 3}}};
        CHECK(territory_size(t) > 6.0);
    }
    SECTION("area branch scales quadratically, fallback linearly") {
        const NerveTree area_tree{6, {1, 1}, {{0, 0}, {4, 0}, {0, 3}}};
        NerveTree scaled = area_tree;
        scaled.base = {3, 3};
        scaled.ends = {{0, 0}, {12, 0}, {0, 9}};
        CHECK(territory_size(scaled) ==
              Catch::Approx(9.0 * territory_size(area_tree)).epsilon(1e-12));

        const NerveTree line_tree{7, {0, 0}, {{3, 4}}};
        NerveTree line_scaled = line_tree;
        line_scaled.ends = {{9, 12}};
        CHECK(territory_size(line_scaled) ==
              Catch::Approx(3.0 * territory_size(line_tree)).epsilon(1e-12));
    }
}

TEST_CASE("point in polygon", "[territory]") {
    const Polygon square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    CHECK(point_in_polygon({0.5, 0.5}, square));
    CHECK_FALSE(point_in_polygon({1.5, 0.5}, square));
    CHECK_FALSE(point_in_polygon({0.5, -0.5}, square));
    const Polygon tri{{{0, 0}, {4, 0}, {0, 3}}};
    CHECK(point_in_polygon({1, 1}, tri));
    CHECK_FALSE(point_in_polygon({3, 3}, tri));
}

TEST_CASE("union area of polygons", "[territory]") {
    const Window w(0, 0, 6, 6);
    const auto square = [](double x0, double y0, double sx, double sy) {
        return Polygon{{{x0, y0}, {x0 + sx, y0}, {x0 + sx, y0 + sy}, {x0, y0 + sy}}};
    };
    // off-lattice offsets so the midpoint grid cannot be trivially aligned
    const Polygon a = square(0.13, 0.27, 1, 1);
    const Polygon b = square(3.41, 2.89, 1, 1);
    const Polygon wide = square(1.07, 4.33, 2, 1);

    SECTION("disjoint squares add") {
        CHECK(union_area({a, b}, w, 0.01) == Catch::Approx(2.0).epsilon(0.01));
    }
    SECTION("identical squares count once") {
        CHECK(union_area({a, a}, w, 0.01) == Catch::Approx(1.0).epsilon(0.01));
    }
    SECTION("three disjoint pieces") {
        // 1 + 1 + 2: the wide piece is a 2x1 rectangle
        CHECK(union_area({a, b, wide}, w, 0.01) == Catch::Approx(4.0).epsilon(0.01));
    }
    SECTION("overlap never exceeds the sum of areas") {
        const Polygon shifted = square(0.6, 0.6, 1, 1); // overlaps a
        const double u = union_area({a, shifted}, w, 0.01);
        CHECK(u < 2.0);
        CHECK(u > 1.0);
        CHECK(u == Catch::Approx(2.0 - 0.53 * 0.67).epsilon(0.02));
    }
    SECTION("empty input and bad resolution") {
        CHECK(union_area({}, w) == 0.0);
        CHECK_THROWS_AS(union_area({a}, w, 0.0), data_error);
        CHECK_THROWS_AS(union_area({a}, w, -1.0), data_error);
    }
}

TEST_CASE("empirical CDF on a grid", "[territory]") {
    SECTION("hand example") {
        const SummaryCurve c = ecdf_curve({1.0, 2.0, 3.0}, {0.0, 1.0, 2.0, 3.0, 4.0});
        const std::vector<double> expect{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0};
        for (std::size_t i = 0; i < expect.size(); ++i)
            CHECK(c.values[i] == Catch::Approx(expect[i]).epsilon(1e-15));
        CHECK(c.kind == CurveKind::ecdf);
    }
    SECTION("repeated values make a single step") {
        const SummaryCurve c = ecdf_curve({2.0, 2.0}, {1.0, 2.0, 3.0});
        CHECK(c.values == std::vector<double>{0.0, 1.0, 1.0});
    }
    SECTION("matches direct counting on random data") {
        Rng rng(31);
        std::vector<double> values;
        for (int i = 0; i < 40; ++i) values.push_back(rng.uniform(0, 10));
        const std::vector<double> grid{0.0, 2.5, 5.0, 7.5, 10.0};
        const SummaryCurve c = ecdf_curve(values, grid);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            int count = 0;
            for (double v : values)
                if (v <= grid[g]) ++count;
            CHECK(c.values[g] == Catch::Approx(count / 40.0).epsilon(1e-15));
        }
    }
    SECTION("empty input is an error") {
        CHECK_THROWS_AS(ecdf_curve({}, {0.0, 1.0}), data_error);
    }
}
