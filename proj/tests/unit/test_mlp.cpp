#include <cmath>
#include <sstream>

#include "doctest.h"
#include "glova/agent.hpp"
#include "glova/error.hpp"
#include "glova/mlp.hpp"

using namespace glova;

TEST_SUITE("mlp") {

namespace {

void randomize(Mlp& net, RngStream& rng, double scale) {
    auto flat = net.flatten();
    for (auto& v : flat) v = scale * rng.normal();
    net.assign(flat);
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(num) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

template <typename Loss>
std::vector<double> numeric_gradient(Mlp& net, Loss&& loss, double step = 1e-6) {
    auto flat = net.flatten();
    std::vector<double> g(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double keep = flat[i];
        flat[i] = keep + step;
        net.assign(flat);
        const double up = loss();
        flat[i] = keep - step;
        net.assign(flat);
        const double down = loss();
        flat[i] = keep;
        g[i] = (up - down) / (2.0 * step);
    }
    net.assign(flat);
    return g;
}

}  // namespace

TEST_CASE("shapes and activations") {
    RngStream rng(1, "mlp");
    Mlp net({4, 8, 8, 8, 4}, Activation::tanh, Activation::sigmoid, rng);
    CHECK(net.depth() == 4);
    CHECK(net.input_dim() == 4);
    CHECK(net.output_dim() == 4);
    CHECK(net.parameter_count() == (4 * 8 + 8) + 2 * (8 * 8 + 8) + (8 * 4 + 4));
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 7);
    const Eigen::MatrixXd y = net.forward(x);
    CHECK(y.rows() == 4);
    CHECK(y.cols() == 7);
    CHECK(y.minCoeff() > 0.0);
    CHECK(y.maxCoeff() < 1.0);
    CHECK(net.forward(x) == y);
}

TEST_CASE("initialization ranges") {
    RngStream rng(2, "mlp");
    Mlp net({10, 64, 64, 64, 1}, Activation::tanh, Activation::linear, rng);
    const auto& layers = net.layers();
    CHECK(layers.back().weight.cwiseAbs().maxCoeff() <= 3e-3);
    CHECK(layers.front().weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(10.0));
    CHECK(layers[1].weight.cwiseAbs().maxCoeff() <= 1.0 / 8.0);
}

TEST_CASE("flatten and assign round-trip") {
    RngStream rng(3, "mlp");
    Mlp net({3, 5, 2}, Activation::tanh, Activation::linear, rng);
    auto flat = net.flatten();
    for (auto& v : flat) v *= 2.0;
    net.assign(flat);
    CHECK(net.flatten() == flat);
    flat.pop_back();
    CHECK_THROWS_AS(net.assign(flat), StructuralError);
}

TEST_CASE("save and load are bit-exact") {
    RngStream rng(4, "mlp");
    Mlp net({3, 6, 6, 2}, Activation::tanh, Activation::sigmoid, rng);
    Adam opt(net, 1e-3);
    MlpGradient g = net.zero_gradient();
    for (auto& l : g.layers) l.weight.setConstant(0.1);
    opt.step(net, g);
    std::stringstream ss;
    net.save(ss);
    opt.save(ss);
    const auto back = Mlp::load(ss);
    const auto opt2 = Adam::load(ss);
    CHECK(back.flatten() == net.flatten());
    CHECK(back.output_activation() == Activation::sigmoid);
    CHECK(opt2.steps() == 1);
    CHECK(opt2.learning_rate() == 1e-3);
}

TEST_CASE("zero learning rate leaves weights bit-exact") {
    RngStream rng(5, "mlp");
    Mlp net({3, 4, 1}, Activation::tanh, Activation::linear, rng);
    const auto before = net.flatten();
    Adam opt(net, 0.0);
    MlpGradient g = net.zero_gradient();
    for (auto& l : g.layers) l.weight.setConstant(1.0);
    opt.step(net, g);
    CHECK(net.flatten() == before);
}

TEST_CASE("Adam moves against the gradient") {
    RngStream rng(6, "mlp");
    Mlp net({2, 3, 1}, Activation::tanh, Activation::linear, rng);
    const auto before = net.flatten();
    Adam opt(net, 1e-2);
    MlpGradient g = net.zero_gradient();
    for (auto& l : g.layers) l.bias.setConstant(1.0);
    opt.step(net, g);
    // first Adam step on a unit gradient moves each bias by exactly -lr (up to epsilon)
    CHECK(net.layers().back().bias(0) == doctest::Approx(before.back() - 1e-2).epsilon(1e-6));
}

TEST_CASE("critic loss gradient matches finite differences") {
    RngStream rng(7, "grad");
    for (int trial = 0; trial < 10; ++trial) {
        Mlp net({5, 16, 16, 16, 1}, Activation::tanh, Activation::linear, rng);
        randomize(net, rng, 0.5);
        const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 6);
        const Eigen::RowVectorXd y = Eigen::RowVectorXd::Random(6);
        MlpGradient g;
        critic_loss(net, x, y, 0.0, &g);
        const auto numeric = numeric_gradient(net, [&] { return critic_loss(net, x, y, 0.0, nullptr); });
        CHECK(relative_error(flatten(g), numeric) < 1e-4);
    }
}

TEST_CASE("actor loss gradient matches finite differences") {
    RngStream rng(8, "grad");
    AgentConfig cfg;
    cfg.hidden = {12, 12, 12};
    cfg.ensemble_size = 4;
    for (int trial = 0; trial < 10; ++trial) {
        Actor actor(4, cfg, rng);
        CriticEnsemble critic(4, cfg, rng);
        randomize(actor.net, rng, 0.5);
        for (auto& m : critic.models) randomize(m, rng, 0.5);
        const Eigen::MatrixXd x = (Eigen::MatrixXd::Random(4, 5).array() + 1.0) / 2.0;
        MlpGradient g;
        actor_loss(actor.net, critic, x, 0.0, &g);
        const auto numeric = numeric_gradient(actor.net, [&] { return actor_loss(actor.net, critic, x, 0.0, nullptr); });
        CHECK(relative_error(flatten(g), numeric) < 1e-4);
    }
}

TEST_CASE("input gradient of backward matches finite differences") {
    RngStream rng(9, "grad");
    Mlp net({3, 7, 7, 2}, Activation::tanh, Activation::sigmoid, rng);
    randomize(net, rng, 0.7);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 1);
    Mlp::Tape tape;
    net.forward(x, tape);
    const Eigen::MatrixXd dout = Eigen::MatrixXd::Ones(2, 1);
    const Eigen::MatrixXd dx = net.backward(tape, dout, nullptr);
    for (int i = 0; i < 3; ++i) {
        Eigen::MatrixXd up = x, down = x;
        up(i) += 1e-6;
        down(i) -= 1e-6;
        const double fd = (net.forward(up).sum() - net.forward(down).sum()) / 2e-6;
        CHECK(dx(i) == doctest::Approx(fd).epsilon(1e-6));
    }
}

}  // TEST_SUITE
