#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grucap/gradcheck.hpp"
#include "grucap/gru.hpp"
#include "test_util.hpp"

using namespace grucap;

TEST_CASE("zero parameters: h_t = 0.5 * h_prev exactly") {
    GruParams p = GruParams::zeros(3, 2);
    Tape tape;
    Tensor x = Tensor::from_values({2}, {0.7, -1.3});
    Tensor h = Tensor::from_values({3}, {0.5, -0.25, 1.0});
    GruStep s = gru_step(tape, x, h, p);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(s.z.at(i) == 0.5);
        CHECK(s.r.at(i) == 0.5);
        CHECK(s.candidate.at(i) == 0.0);
        CHECK(s.h.at(i) == 0.5 * h.at(i));
    }

    Tensor h0 = Tensor::zeros({3});
    GruStep s0 = gru_step(tape, x, h0, p);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(s0.h.at(i) == 0.0);
    }
}

TEST_CASE("hand-evaluated step, H=I=2") {
    // W_z = I, U_z = 0; other matrices small hand-set values; biases zero.
    GruParams p = GruParams::zeros(2, 2);
    p.w_z.data() = {1.0, 0.0, 0.0, 1.0};
    p.w_r.data() = {0.5, -0.25, 0.1, 0.3};
    p.u_r.data() = {0.2, 0.0, -0.1, 0.4};
    p.w_h.data() = {0.3, 0.7, -0.2, 0.5};
    p.u_h.data() = {0.6, -0.3, 0.25, 0.15};

    Tape tape;
    Tensor x = Tensor::from_values({2}, {1.0, -1.0});
    Tensor h = Tensor::from_values({2}, {0.5, -0.5});
    GruStep s = gru_step(tape, x, h, p);

    CHECK(std::fabs(s.z.at(0) - 0.7310585786300049) < 1e-12);
    CHECK(std::fabs(s.z.at(1) - 0.2689414213699951) < 1e-12);
    CHECK(std::fabs(s.r.at(0) - 0.700567142473973) < 1e-12);
    CHECK(std::fabs(s.r.at(1) - 0.389360766050778) < 1e-12);
    CHECK(std::fabs(s.candidate.at(0) - (-0.08454249703403159)) < 1e-12);
    CHECK(std::fabs(s.candidate.at(1) - (-0.5918651174678559)) < 1e-12);
    CHECK(std::fabs(s.h.at(0) - 0.07266519296946701) < 1e-12);
    CHECK(std::fabs(s.h.at(1) - (-0.5247063352661268)) < 1e-12);
}

TEST_CASE("dimension mismatches are rejected") {
    GruParams p = GruParams::zeros(3, 2);
    Tape tape;
    CHECK_THROWS_AS(gru_step(tape, Tensor::zeros({3}), Tensor::zeros({3}), p), DimensionError);
    CHECK_THROWS_AS(gru_step(tape, Tensor::zeros({2}), Tensor::zeros({2}), p), DimensionError);
}

TEST_CASE("gru_sequence folds gru_step bitwise") {
    Rng rng(41);
    GruParams p = GruParams::init(4, 3, rng);
    std::vector<Tensor> xs;
    for (int i = 0; i < 3; ++i) xs.push_back(testutil::random_tensor({3}, rng, false));
    Tensor h0 = Tensor::zeros({4});

    Tape tape;
    const auto seq = gru_sequence(tape, xs, h0, p);
    CHECK(seq.size() == 3);

    Tape manual_tape;
    Tensor h = h0;
    for (const Tensor& x : xs) {
        h = gru_step(manual_tape, x, h, p).h;
    }
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(seq.back().h.at(i) == h.at(i));  // bitwise
    }

    CHECK(gru_sequence(tape, {}, h0, p).empty());

    Tape t2;
    const auto one = gru_sequence(t2, {xs[0]}, h0, p);
    Tape t3;
    const GruStep single = gru_step(t3, xs[0], h0, p);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(one[0].h.at(i) == single.h.at(i));
    }
}

TEST_CASE("gate ranges, interpolation bound and boundedness on random inputs") {
    Rng rng(2718);
    GruParams p = GruParams::init(5, 4, rng);
    for (int trial = 0; trial < 200; ++trial) {
        Tape tape;
        Tensor x = testutil::random_tensor({4}, rng, false);
        Tensor h = testutil::random_tensor({5}, rng, false, -0.99, 0.99);
        GruStep s = gru_step(tape, x, h, p);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(s.z.at(i) > 0.0);
            CHECK(s.z.at(i) < 1.0);
            CHECK(s.r.at(i) > 0.0);
            CHECK(s.r.at(i) < 1.0);
            const double lo = std::min(s.candidate.at(i), h.at(i));
            const double hi = std::max(s.candidate.at(i), h.at(i));
            CHECK(s.h.at(i) >= lo);
            CHECK(s.h.at(i) <= hi);
        }
    }

    // starting from h0 = 0 the state stays inside (-1, 1)
    Tensor h = Tensor::zeros({5});
    Tape tape;
    for (int t = 0; t < 50; ++t) {
        Tensor x = testutil::random_tensor({4}, rng, false, -5.0, 5.0);
        h = gru_step(tape, x, h, p).h;
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(h.at(i) > -1.0);
            CHECK(h.at(i) < 1.0);
        }
    }
}

TEST_CASE("gradient check through a 4-step unroll") {
    Rng rng(99);
    GruParams p = GruParams::init(3, 2, rng);
    std::vector<Tensor> xs;
    for (int i = 0; i < 4; ++i) xs.push_back(testutil::random_tensor({2}, rng, false));
    Tensor h0 = Tensor::zeros({3});
    Tensor w = testutil::random_tensor({3}, rng, false);

    auto forward = [&](Tape& tape) {
        Tensor h = h0;
        for (const Tensor& x : xs) h = gru_step(tape, x, h, p).h;
        return sum(tape, hadamard(tape, h, w));
    };
    GradCheck check;
    const auto res = check.run(
        p.named_blocks(),
        [&]() {
            Tape t;
            return forward(t).value();
        },
        [&]() {
            Tape t;
            Tensor loss = forward(t);
            t.backward(loss);
        });
    CHECK(res.max_rel_err < 1e-4);
}
