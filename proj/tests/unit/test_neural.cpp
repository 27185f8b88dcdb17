#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "panelcast/error.hpp"
#include "panelcast/neural.hpp"
#include "panelcast/synthetic.hpp"
#include "support/gradcheck.hpp"

using namespace panelcast;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

MlpModel scalar_linear(double w, double b) {
    MlpModel m;
    m.layers.push_back({Matrix(1, 1, w), Vector{b}, Activation::identity});
    return m;
}

}  // namespace

TEST_SUITE("neural") {

TEST_CASE("zero network and affine evaluation") {
    auto zero = MlpModel::create(3, {10, 10}, 1);
    for (auto b : zero.parameter_blocks()) std::fill(b.begin(), b.end(), 0.0);
    CHECK(mlp_forward(zero, std::vector<double>{1, 2, 3}).first == 0.0);
    CHECK(mlp_forward(scalar_linear(2, 1), std::vector<double>{3}).first == 7.0);
    CHECK_THROWS_AS(mlp_forward(zero, std::vector<double>{1}), DimensionError);
}

TEST_CASE("two layer tanh network by hand") {
    MlpModel m;
    m.layers.push_back({Matrix(2, 2, std::vector<double>{0.1, -0.2, 0.3, 0.4}), Vector{0.05, -0.1}, Activation::tanh});
    m.layers.push_back({Matrix(1, 2, std::vector<double>{0.7, -0.5}), Vector{0.2}, Activation::identity});
    const std::vector<double> x{1.0, 2.0};
    const double h0 = std::tanh(0.1 * 1.0 - 0.2 * 2.0 + 0.05);
    const double h1 = std::tanh(0.3 * 1.0 + 0.4 * 2.0 - 0.1);
    CHECK(std::abs(mlp_forward(m, x).first - (0.7 * h0 - 0.5 * h1 + 0.2)) <= 1e-12);
}

TEST_CASE("scalar chain rule and zero error") {
    const auto m = scalar_linear(2, 1);
    const std::vector<double> x{3};
    const auto [pred, cache] = mlp_forward(m, x);
    const auto g = mlp_backward(m, cache, 0.0);
    CHECK(g.dW[0](0, 0) == 42.0);
    CHECK(g.db[0][0] == 14.0);
    const auto z = mlp_backward(m, cache, pred);
    CHECK(z.dW[0](0, 0) == 0.0);
    CHECK(z.db[0][0] == 0.0);
}

TEST_CASE("stale caches are rejected") {
    auto m = scalar_linear(2, 1);
    const auto cache = mlp_forward(m, std::vector<double>{3}).second;
    m.layers[0].b[0] = 1.5;
    CHECK_THROWS_AS(mlp_backward(m, cache, 0.0), Error);
    auto p = LstmParams::create(2, 2, 3);
    const auto lc = lstm_forward_seq(p, Sequence{{0.1, 0.2}}).second;
    p.readout_b = 4.0;
    CHECK_THROWS_AS(lstm_backward(p, lc, 0.0), Error);
}

TEST_CASE("MLP gradients match finite differences") {
    Rng rng(77);
    testutil::GradStats all;
    for (int draw = 0; draw < 10; ++draw) all.merge(testutil::mlp_gradient_draw(rng, 5, {10, 10}, 1e-5, 1e-6, 1e-4, 1e-3));
    REQUIRE(all.checked > 0);
    CHECK(static_cast<double>(all.within_tight) >= 0.95 * static_cast<double>(all.checked));
    CHECK(all.within_loose == all.checked);
}

TEST_CASE("LSTM gradients match finite differences") {
    Rng rng(78);
    testutil::GradStats all;
    for (int draw = 0; draw < 10; ++draw) all.merge(testutil::lstm_gradient_draw(rng, 4, 3, 3, 1e-5, 1e-6, 1e-4, 1e-3));
    REQUIRE(all.checked > 0);
    CHECK(static_cast<double>(all.within_tight) >= 0.95 * static_cast<double>(all.checked));
    CHECK(all.within_loose == all.checked);
}

TEST_CASE("zero-parameter LSTM closed form") {
    const auto p = LstmParams::zeros(3, 2);
    LstmState s{{0.3, -0.2}, {0.8, -1.6}};
    const auto next = lstm_step(p, s, std::vector<double>{1, 2, 3});
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(next.C[k] == 0.5 * s.C[k]);
        CHECK(next.h[k] == 0.5 * std::tanh(0.5 * s.C[k]));
    }
    auto q = p;
    q.readout_b = 1.25;
    CHECK(lstm_forward_seq(q, Sequence{{1, 2, 3}, {4, 5, 6}, {-1, 0, 1}}).first == 1.25);
    CHECK_THROWS_AS(lstm_forward_seq(q, Sequence{}), DimensionError);
    CHECK_THROWS_AS(lstm_step(q, s, std::vector<double>{1}), DimensionError);
}

TEST_CASE("scalar LSTM step by hand") {
    auto p = LstmParams::zeros(1, 1);
    p.Wf(0, 0) = 0.5; p.Uf(0, 0) = -0.3; p.bf[0] = 0.1;
    p.Wi(0, 0) = -0.4; p.Ui(0, 0) = 0.2; p.bi[0] = 0.05;
    p.Wc(0, 0) = 0.9; p.Uc(0, 0) = 0.6; p.bc[0] = -0.2;
    p.Wo(0, 0) = 0.3; p.Uo(0, 0) = -0.7; p.bo[0] = 0.15;
    const double x = 0.8, h0 = 0.25, c0 = -0.4;
    const double f = sigmoid(0.5 * x - 0.3 * h0 + 0.1);
    const double i = sigmoid(-0.4 * x + 0.2 * h0 + 0.05);
    const double g = std::tanh(0.9 * x + 0.6 * h0 - 0.2);
    const double o = sigmoid(0.3 * x - 0.7 * h0 + 0.15);
    const double c = f * c0 + i * g;
    const auto s = lstm_step(p, {{h0}, {c0}}, std::vector<double>{x});
    CHECK(std::abs(s.C[0] - c) <= 1e-12);
    CHECK(std::abs(s.h[0] - o * std::tanh(c)) <= 1e-12);

    p.readout_w[0] = 1.5;
    p.readout_b = -0.1;
    const auto first = lstm_step(p, LstmState::zeros(1), std::vector<double>{x});
    CHECK(lstm_forward_seq(p, Sequence{{x}}).first == doctest::Approx(1.5 * first.h[0] - 0.1).epsilon(1e-14));
}

TEST_CASE("state stays bounded from a zero cell") {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        auto p = LstmParams::zeros(3, 4);
        testutil::randomize(p.parameter_blocks(), rng, 5.0);
        LstmState s{testutil::random_vector(rng, 4), Vector(4, 0.0)};
        const auto next = lstm_step(p, s, testutil::random_vector(rng, 3, -10, 10));
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(std::abs(next.C[k]) <= 1.0);
            CHECK(std::abs(next.h[k]) < 1.0);
        }
    }
}

TEST_CASE("sequences follow the year layout") {
    const auto panel = generate_synthetic(3, 4, 2011, 2021);
    const auto m = build_supervised(panel, LagConfig::for_panel(panel, 2), Split::test);
    const auto seqs = to_sequences(m);
    REQUIRE(seqs.size() == m.n());
    REQUIRE(seqs[0].size() == 3);
    for (const auto& step : seqs[0]) CHECK(step.size() == 90);
    const auto s = *panel.state_index(m.provenance[0].state);
    const auto t = *panel.year_index(2021);
    // Oldest year first; the last entry of each step is the lagged target.
    CHECK(seqs[0][0][0] == panel.at(t - 2, s, 1));
    CHECK(seqs[0][0][89] == panel.target(t - 2, s));
    CHECK(seqs[0][2][0] == panel.at(t, s, 1));
    CHECK(seqs[0][2][89] == 0.0);
}

TEST_CASE("zero rate leaves parameters unchanged") {
    Rng rng(6);
    const auto X = testutil::random_matrix(rng, 20, 4);
    const auto y = testutil::random_vector(rng, 20);
    const auto m0 = MlpModel::create(4, {10, 10}, 9);
    const auto m1 = train_gd(m0, X, y, {20, 0.0, 0.0, 1});
    for (std::size_t l = 0; l < m0.layers.size(); ++l) {
        CHECK(m1.layers[l].W == m0.layers[l].W);
        CHECK(m1.layers[l].b == m0.layers[l].b);
    }
}

TEST_CASE("scalar neuron learns y = 2x") {
    Matrix X(21, 1);
    Vector y(21);
    for (std::size_t i = 0; i < 21; ++i) {
        X(i, 0) = -1.0 + 0.1 * static_cast<double>(i);
        y[i] = 2.0 * X(i, 0);
    }
    TrainReport rep;
    const auto m = train_gd(scalar_linear(0.0, 0.5), X, y, {500, 0.5, 0.0, 0}, &rep);
    CHECK(std::abs(m.layers[0].W(0, 0) - 2.0) <= 1e-2);
    CHECK(std::abs(m.layers[0].b[0]) <= 1e-2);
    CHECK(rep.loss.size() == 501);
}

TEST_CASE("safeguarded descent never ends above its start") {
    Rng rng(7);
    const auto X = testutil::random_matrix(rng, 40, 6);
    const auto y = testutil::random_vector(rng, 40, 0, 10);
    TrainReport rep;
    (void)train_gd(MlpModel::create(6, {10, 10}, 2), X, y, {500, 5.0, 0.005, 3}, &rep);
    CHECK(rep.loss.back() <= rep.loss.front());
    CHECK(rep.rejected_steps > 0);
    for (std::size_t k = 1; k < rep.loss.size(); ++k) CHECK(rep.loss[k] <= rep.loss[k - 1]);

    const auto seqs = std::vector<Sequence>(10, Sequence{{0.1, 0.2}, {0.3, -0.1}});
    TrainReport lrep;
    (void)train_gd(LstmParams::create(2, 3, 1), seqs, Vector(10, 1.0), {200, 2.0, 0.0, 0}, &lrep);
    CHECK(lrep.loss.back() <= lrep.loss.front());
}

TEST_CASE("training is deterministic and zero dropout is a no-op") {
    Rng rng(8);
    const auto X = testutil::random_matrix(rng, 30, 3);
    const auto y = testutil::random_vector(rng, 30);
    const auto m0 = MlpModel::create(3, {10, 10}, 4);
    TrainReport a, b;
    const auto p = train_gd(m0, X, y, {100, 0.05, 0.0, 1}, &a);
    const auto q = train_gd(m0, X, y, {100, 0.05, 0.0, 999}, &b);
    CHECK(a.loss == b.loss);
    CHECK(p.layers[0].W == q.layers[0].W);
    TrainReport c, d;
    const auto r = train_gd(m0, X, y, {100, 0.05, 0.2, 5}, &c);
    const auto s = train_gd(m0, X, y, {100, 0.05, 0.2, 5}, &d);
    CHECK(c.loss == d.loss);
    CHECK(r.layers[1].W == s.layers[1].W);
    CHECK(c.loss != a.loss);
}

TEST_CASE("non-finite loss reports the epoch") {
    Matrix X(2, 1, std::vector<double>{1.0, 2.0});
    const Vector y{1.0, std::nan("")};
    try {
        (void)train_gd(scalar_linear(1, 0), X, y, {5, 0.1, 0.0, 0});
        FAIL("expected an error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }
    CHECK_THROWS_AS(TrainOptions({0, 0.1, 0.0, 0}).validate(), ConfigError);
    CHECK_THROWS_AS(TrainOptions({5, 0.1, 1.0, 0}).validate(), ConfigError);
}

}  // TEST_SUITE
