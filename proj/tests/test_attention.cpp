#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "grucap/attention.hpp"
#include "grucap/gradcheck.hpp"
#include "test_util.hpp"

using namespace grucap;

namespace {

void check_simplex(const Tensor& weights, double tol = 1e-9) {
    double total = 0.0;
    for (std::size_t i = 0; i < weights.numel(); ++i) {
        CHECK(weights.at(i) >= 0.0);
        total += weights.at(i);
    }
    CHECK(std::fabs(total - 1.0) < tol);
}

}  // namespace

TEST_CASE("identical encoder rows force uniform weights and c = h_1") {
    Rng rng(8);
    AttentionParams p = AttentionParams::init(3, 4, 5, rng);
    Tensor s = testutil::random_tensor({4}, rng, false);
    std::vector<double> row = testutil::random_values(5, rng);
    std::vector<double> enc_values;
    for (int j = 0; j < 6; ++j) enc_values.insert(enc_values.end(), row.begin(), row.end());
    Tensor enc = Tensor::from_values({6, 5}, enc_values);

    Tape tape;
    AttentionOutput out = attend(tape, s, enc, p);
    for (std::size_t j = 0; j < 6; ++j) {
        CHECK(out.weights.at(j) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    }
    for (std::size_t d = 0; d < 5; ++d) {
        CHECK(out.context.at(d) == doctest::Approx(row[d]).epsilon(1e-12));
    }
}

TEST_CASE("zero score head gives uniform weights regardless of inputs") {
    Rng rng(9);
    AttentionParams p = AttentionParams::init(3, 4, 5, rng);
    std::fill(p.v.data().begin(), p.v.data().end(), 0.0);
    Tensor s = testutil::random_tensor({4}, rng, false);
    Tensor enc = testutil::random_tensor({7, 5}, rng, false);
    Tape tape;
    AttentionOutput out = attend(tape, s, enc, p);
    for (std::size_t j = 0; j < 7; ++j) {
        CHECK(out.scores.at(j) == 0.0);
        CHECK(out.weights.at(j) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    }
}

TEST_CASE("hand-evaluated case, T=3 A=2") {
    AttentionParams p = AttentionParams::zeros(2, 2, 2);
    p.w_s.data() = {0.5, -0.5, 0.25, 0.75};
    p.w_h.data() = {1.0, 0.0, 0.0, -1.0};
    p.v.data() = {0.5, 1.0};
    Tensor s = Tensor::from_values({2}, {0.2, -0.4});
    Tensor enc = Tensor::from_values({3, 2}, {1.0, 0.5, -0.5, 1.0, 0.0, -1.0});

    Tape tape;
    AttentionOutput out = attend(tape, s, enc, p);
    CHECK(std::fabs(out.scores.at(0) - (-0.20428737273063413)) < 1e-12);
    CHECK(std::fabs(out.scores.at(1) - (-0.9469713000699649)) < 1e-12);
    CHECK(std::fabs(out.scores.at(2) - 0.7808052586130828) < 1e-12);
    CHECK(std::fabs(out.weights.at(0) - 0.2407379076063476) < 1e-12);
    CHECK(std::fabs(out.weights.at(1) - 0.11455154473628545) < 1e-12);
    CHECK(std::fabs(out.weights.at(2) - 0.644710547657367) < 1e-12);
    CHECK(std::fabs(out.context.at(0) - 0.18346213523820487) < 1e-12);
    CHECK(std::fabs(out.context.at(1) - (-0.40979004911790773)) < 1e-12);
}

TEST_CASE("simplex and convex hull on random draws") {
    Rng rng(31337);
    AttentionParams p = AttentionParams::init(4, 3, 4, rng);
    for (int trial = 0; trial < 500; ++trial) {
        Tape tape;
        const std::size_t t_len = 1 + rng.index(9);
        Tensor s = testutil::random_tensor({3}, rng, false);
        Tensor enc = testutil::random_tensor({t_len, 4}, rng, false);
        AttentionOutput out = attend(tape, s, enc, p);
        check_simplex(out.weights);
        for (std::size_t d = 0; d < 4; ++d) {
            double lo = enc.at(0, d), hi = enc.at(0, d);
            for (std::size_t j = 1; j < t_len; ++j) {
                lo = std::min(lo, enc.at(j, d));
                hi = std::max(hi, enc.at(j, d));
            }
            CHECK(out.context.at(d) >= lo - 1e-12);
            CHECK(out.context.at(d) <= hi + 1e-12);
        }
    }
}

TEST_CASE("permutation equivariance") {
    Rng rng(606);
    AttentionParams p = AttentionParams::init(3, 3, 3, rng);
    Tensor s = testutil::random_tensor({3}, rng, false);
    const std::size_t t_len = 5;
    Tensor enc = testutil::random_tensor({t_len, 3}, rng, false);

    std::vector<std::size_t> perm(t_len);
    for (std::size_t i = 0; i < t_len; ++i) perm[i] = i;
    rng.shuffle(perm);

    std::vector<double> permuted(t_len * 3);
    for (std::size_t j = 0; j < t_len; ++j) {
        for (std::size_t d = 0; d < 3; ++d) {
            permuted[j * 3 + d] = enc.at(perm[j], d);
        }
    }
    Tensor enc_perm = Tensor::from_values({t_len, 3}, permuted);

    Tape tape;
    AttentionOutput base = attend(tape, s, enc, p);
    AttentionOutput perm_out = attend(tape, s, enc_perm, p);
    for (std::size_t j = 0; j < t_len; ++j) {
        CHECK(perm_out.weights.at(j) == base.weights.at(perm[j]));  // bitwise
    }
    for (std::size_t d = 0; d < 3; ++d) {
        CHECK(std::fabs(perm_out.context.at(d) - base.context.at(d)) < 1e-12);
    }
}

TEST_CASE("score shift invariance") {
    Rng rng(77);
    Tensor scores = testutil::random_tensor({6}, rng, false);
    std::vector<double> shifted = scores.data();
    for (double& v : shifted) v += 3.7;
    Tensor scores_shifted = Tensor::from_values({6}, shifted);

    Tape tape;
    Tensor a = softmax_axis(tape, scores, 0);
    Tensor b = softmax_axis(tape, scores_shifted, 0);
    for (std::size_t j = 0; j < 6; ++j) {
        CHECK(std::fabs(a.at(j) - b.at(j)) < 1e-12);
    }
}

TEST_CASE("gradient check through attend (all parameter blocks and both inputs)") {
    Rng rng(4242);
    AttentionParams p = AttentionParams::init(3, 4, 3, rng);
    Tensor s = testutil::random_tensor({4}, rng, true);
    Tensor enc = testutil::random_tensor({5, 3}, rng, true);
    Tensor w = testutil::random_tensor({3}, rng, false);

    auto forward = [&](Tape& t) {
        AttentionOutput out = attend(t, s, enc, p);
        return sum(t, hadamard(t, out.context, w));
    };
    auto params = p.named_blocks();
    params.emplace_back("query", s);
    params.emplace_back("encoder", enc);
    GradCheck check;
    const auto res = check.run(
        params,
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

TEST_CASE("attend rejects dimension mismatches") {
    Rng rng(1);
    AttentionParams p = AttentionParams::init(3, 4, 5, rng);
    Tape tape;
    CHECK_THROWS_AS(attend(tape, Tensor::zeros({3}), Tensor::zeros({2, 5}), p), DimensionError);
    CHECK_THROWS_AS(attend(tape, Tensor::zeros({4}), Tensor::zeros({2, 4}), p), DimensionError);
}

TEST_CASE("attention_map reshapes row-major and validates size") {
    HeatGrid uniform = attention_map({0.25, 0.25, 0.25, 0.25}, 2, 2);
    CHECK(uniform.rows == 2);
    CHECK(uniform.values == std::vector<double>{0.25, 0.25, 0.25, 0.25});

    HeatGrid hot = attention_map({0, 0, 0, 1}, 2, 2);
    CHECK(hot.values[3] == 1.0);  // grid position (1,1)

    CHECK_THROWS_AS(attention_map({0.5, 0.5}, 2, 2), DimensionError);

    // reshape(flatten(grid)) == grid for a random 8x8
    Rng rng(55);
    const auto values = testutil::random_values(64, rng, 0.0, 1.0);
    HeatGrid g = attention_map(values, 8, 8);
    CHECK(g.values == values);
}
