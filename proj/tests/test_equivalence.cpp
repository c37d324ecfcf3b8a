#include "doctest.h"

#include <cmath>
#include <random>

#include "entk/equivalence.hpp"
#include "entk/reference/planar_oracle.hpp"

using namespace entk;

TEST_CASE("finite group actions compose")
{
    std::mt19937_64 rng(51);
    auto rot = FiniteGroupSpec::rotations(4, 4, 4);
    auto rt = FiniteGroupSpec::roto_translations(3, 3, 4);
    CHECK(rot.order() == 4);
    CHECK(rt.order() == 36);
    auto f4 = oracle::random_image(rng, 2, 4, 4), f3 = oracle::random_image(rng, 1, 3, 3);
    CHECK(rot.act(0, f4).data == f4.data);
    CHECK(rt.act(0, f3).data == f3.data);
    for (int a = 0; a < rot.order(); ++a)
        for (int b = 0; b < rot.order(); ++b) CHECK(rot.act(rot.compose(a, b), f4).data == rot.act(a, rot.act(b, f4)).data);
    for (int a = 0; a < rt.order(); a += 5)
        for (int b = 0; b < rt.order(); b += 7) CHECK(rt.act(rt.compose(a, b), f3).data == rt.act(a, rt.act(b, f3)).data);
    CHECK(orbit(f3, rt).size() == 36);
    CHECK(rot.act(1, f4).data == planar::rotate_image(f4, 1).data);
}

TEST_CASE("averaged kernel is invariant in both arguments")
{
    std::mt19937_64 rng(52);
    auto rot = FiniteGroupSpec::rotations(3, 3, 4);
    PairKernel base = [](const planar::Image& a, const planar::Image& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i] * (1.0 + i);
        return ScalarKernel{s, 0.0, 0.0, 2 * s};
    };
    auto avg = averaged_kernel(base, rot);
    auto f = oracle::random_image(rng, 1, 3, 3), g = oracle::random_image(rng, 1, 3, 3);
    double k = avg(f, g).k_xy;
    CHECK(avg(f, g).theta == doctest::Approx(2 * k));
    for (int r = 1; r < 4; ++r) CHECK(avg(f, planar::rotate_image(g, r)).k_xy == doctest::Approx(k).epsilon(1e-13));
    // jointly invariant base: invariance carries over to the first argument
    PairKernel dot = [](const planar::Image& a, const planar::Image& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
        return ScalarKernel{s, 0.0, 0.0, 0.0};
    };
    auto avg2 = averaged_kernel(dot, rot);
    for (int r = 1; r < 4; ++r)
        CHECK(avg2(planar::rotate_image(f, r), g).k_xy == doctest::Approx(avg2(f, g).k_xy).epsilon(1e-13));
}

TEST_CASE("averaged cnn kernel equals the gcnn kernel")
{
    for (int H : {3, 4})
        for (int depth : {1, 2, 3, 4})
            for (auto kind : {NonlinKind::relu, NonlinKind::erf}) {
                Thm6Config c;
                c.height = c.width = H;
                c.depth = depth;
                c.nonlin = kind;
                c.trials = 2;
                auto r = verify_thm6(c);
                CHECK(r.conforming);
                CHECK(r.max_deviation < 1e-10);
                CHECK(r.pass);
            }
}

TEST_CASE("zero padding breaks the cnn identity and is flagged")
{
    Thm6Config c;
    c.padding = planar::Padding::zero;
    c.depth = 2;
    c.trials = 2;
    auto r = verify_thm6(c);
    CHECK_FALSE(r.conforming);
    CHECK(std::isfinite(r.max_deviation));
    CHECK_FALSE(r.pass);
}

TEST_CASE("averaged mlp kernel equals the global-filter gcnn kernel")
{
    for (int depth : {1, 2, 3})
        for (auto kind : {NonlinKind::relu, NonlinKind::erf}) {
            Thm5Config c;
            c.depth = depth;
            c.nonlin = kind;
            c.trials = 2;
            auto r = verify_thm5(c);
            CHECK(r.conforming);
            CHECK(r.max_deviation < 1e-10);
            CHECK(r.pass);
        }
    // global lifting makes the kernel right invariant, so local gconvs change nothing
    for (int gs : {1, 3}) {
        Thm5Config local;
        local.gconv_support = gs;
        local.trials = 2;
        auto r = verify_thm5(local);
        CHECK(r.conforming);
        CHECK(r.max_deviation < 1e-10);
    }
}

TEST_CASE("augmented and gcnn predictors agree along the flow")
{
    Thm4Config c;
    auto r = verify_thm4(c);
    REQUIRE(r.times.size() == 9);
    CHECK(std::isinf(r.times.back()));
    CHECK(r.times.front() == doctest::Approx(1e-2));
    CHECK(r.times[7] == doctest::Approx(1e3));
    REQUIRE(r.gaps.size() == 9);
    for (double g : r.gaps) CHECK(g < 1e-8);
    CHECK(r.report.pass);

    c.nonlin = NonlinKind::erf;
    c.times = {0.5, 5.0};
    auto e = verify_thm4(c);
    CHECK(e.times.size() == 3);
    CHECK(e.report.pass);
}
