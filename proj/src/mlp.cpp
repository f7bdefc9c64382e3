#include "glova/mlp.hpp"

#include <cmath>

#include "glova/binary_io.hpp"
#include "glova/error.hpp"

namespace glova {

namespace {

void activate(Eigen::MatrixXd& z, Activation a) {
    switch (a) {
        case Activation::linear: break;
        case Activation::tanh: z = z.array().tanh(); break;
        case Activation::sigmoid: z = (1.0 + (-z.array()).exp()).inverse(); break;
    }
}

// Derivative expressed through the activation output.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& out, Activation a) {
    switch (a) {
        case Activation::linear: return Eigen::MatrixXd::Ones(out.rows(), out.cols());
        case Activation::tanh: return 1.0 - out.array().square();
        case Activation::sigmoid: return out.array() * (1.0 - out.array());
    }
    return Eigen::MatrixXd::Ones(out.rows(), out.cols());
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> dims, Activation hidden, Activation output, RngStream& rng,
         double output_init_scale)
    : hidden_(hidden), output_(output) {
    if (dims.size() < 2) throw StructuralError("an Mlp needs at least input and output dims");
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto in = dims[l], out = dims[l + 1];
        const bool last = l + 2 == dims.size();
        const double bound = last ? output_init_scale : 1.0 / std::sqrt(static_cast<double>(in));
        DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
        for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
            for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
                layer.weight(i, j) = bound * (2.0 * rng.uniform() - 1.0);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
            layer.bias(i) = bound * (2.0 * rng.uniform() - 1.0);
        layers_.push_back(std::move(layer));
    }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
    Tape tape;
    return forward(input, tape);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Tape& tape) const {
    if (static_cast<std::size_t>(input.rows()) != input_dim())
        throw StructuralError("Mlp input has " + std::to_string(input.rows()) + " rows, expected " +
                              std::to_string(input_dim()));
    tape.activations.clear();
    tape.activations.reserve(layers_.size() + 1);
    tape.activations.push_back(input);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = layers_[l].weight * tape.activations.back();
        z.colwise() += layers_[l].bias;
        activate(z, l + 1 == layers_.size() ? output_ : hidden_);
        tape.activations.push_back(std::move(z));
    }
    return tape.activations.back();
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& d_output,
                              MlpGradient* grads) const {
    if (grads) grads->layers.resize(layers_.size());
    Eigen::MatrixXd delta = d_output;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& out = tape.activations[l + 1];
        delta = delta.cwiseProduct(activation_slope(out, l + 1 == layers_.size() ? output_ : hidden_));
        if (grads) {
            grads->layers[l].weight = delta * tape.activations[l].transpose();
            grads->layers[l].bias = delta.rowwise().sum();
        }
        delta = layers_[l].weight.transpose() * delta;
    }
    return delta;
}

MlpGradient Mlp::zero_gradient() const {
    MlpGradient g;
    for (const auto& l : layers_)
        g.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                            Eigen::VectorXd::Zero(l.bias.size())});
    return g;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<double> Mlp::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : layers_) {
        flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
        flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    return flat;
}

void Mlp::assign(const std::vector<double>& flat) {
    if (flat.size() != parameter_count()) throw StructuralError("parameter vector has wrong size");
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = flat[k++];
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = flat[k++];
    }
}

std::vector<double> flatten(const MlpGradient& g) {
    std::vector<double> flat;
    for (const auto& l : g.layers) {
        flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
        flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    return flat;
}

void Mlp::save(std::ostream& out) const {
    bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(hidden_));
    bin::put<std::uint32_t>(out, static_cast<std::uint32_t>(output_));
    bin::put<std::uint64_t>(out, layers_.size());
    for (const auto& l : layers_) {
        bin::put_matrix(out, l.weight);
        bin::put_matrix(out, l.bias);
    }
}

Mlp Mlp::load(std::istream& in) {
    Mlp net;
    net.hidden_ = static_cast<Activation>(bin::get<std::uint32_t>(in));
    net.output_ = static_cast<Activation>(bin::get<std::uint32_t>(in));
    const auto n = bin::get<std::uint64_t>(in);
    if (n == 0 || n > 64) throw StateError("corrupt network in checkpoint");
    for (std::uint64_t i = 0; i < n; ++i) {
        DenseLayer l;
        l.weight = bin::get_matrix(in);
        l.bias = bin::get_matrix(in);
        net.layers_.push_back(std::move(l));
    }
    return net;
}

Adam::Adam(const Mlp& net, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    m_ = net.zero_gradient().layers;
    v_ = m_;
}

void Adam::step(Mlp& net, const MlpGradient& grad) {
    if (lr_ == 0.0) return;
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
            m = beta1_ * m + (1.0 - beta1_) * g;
            v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
            param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
        };
        update(layers[l].weight, m_[l].weight, v_[l].weight, grad.layers[l].weight);
        update(layers[l].bias, m_[l].bias, v_[l].bias, grad.layers[l].bias);
    }
}

void Adam::save(std::ostream& out) const {
    bin::put(out, lr_);
    bin::put(out, beta1_);
    bin::put(out, beta2_);
    bin::put(out, eps_);
    bin::put(out, t_);
    bin::put<std::uint64_t>(out, m_.size());
    for (std::size_t l = 0; l < m_.size(); ++l) {
        bin::put_matrix(out, m_[l].weight);
        bin::put_matrix(out, m_[l].bias);
        bin::put_matrix(out, v_[l].weight);
        bin::put_matrix(out, v_[l].bias);
    }
}

Adam Adam::load(std::istream& in) {
    Adam a;
    a.lr_ = bin::get<double>(in);
    a.beta1_ = bin::get<double>(in);
    a.beta2_ = bin::get<double>(in);
    a.eps_ = bin::get<double>(in);
    a.t_ = bin::get<std::uint64_t>(in);
    const auto n = bin::get<std::uint64_t>(in);
    if (n > 64) throw StateError("corrupt optimizer state in checkpoint");
    a.m_.resize(n);
    a.v_.resize(n);
    for (std::uint64_t l = 0; l < n; ++l) {
        a.m_[l].weight = bin::get_matrix(in);
        a.m_[l].bias = bin::get_matrix(in);
        a.v_[l].weight = bin::get_matrix(in);
        a.v_[l].bias = bin::get_matrix(in);
    }
    return a;
}

}  // namespace glova
