#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "glova/rng.hpp"

namespace glova {

enum class Activation { linear, tanh, sigmoid };

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
};

struct MlpGradient {
    std::vector<DenseLayer> layers;
};

/// Fully connected network. Inputs are column-major batches: one sample per
/// column.
class Mlp {
public:
    struct Tape {
        std::vector<Eigen::MatrixXd> activations;  // [0] = input, back() = output
    };

    Mlp() = default;
    Mlp(std::vector<std::size_t> dims, Activation hidden, Activation output, RngStream& rng,
        double output_init_scale = 3e-3);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Tape& tape) const;

    /// Backpropagates dLoss/dOutput. Fills `grads` (if given, overwritten) and
    /// returns dLoss/dInput.
    Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& d_output,
                             MlpGradient* grads) const;

    MlpGradient zero_gradient() const;

    std::size_t input_dim() const { return layers_.front().weight.cols(); }
    std::size_t output_dim() const { return layers_.back().weight.rows(); }
    std::size_t depth() const { return layers_.size(); }
    std::size_t parameter_count() const;

    std::vector<double> flatten() const;
    void assign(const std::vector<double>& flat);

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    Activation hidden_activation() const { return hidden_; }
    Activation output_activation() const { return output_; }

    void save(std::ostream& out) const;
    static Mlp load(std::istream& in);

private:
    std::vector<DenseLayer> layers_;
    Activation hidden_ = Activation::tanh;
    Activation output_ = Activation::linear;
};

std::vector<double> flatten(const MlpGradient& g);

/// Adaptive moment estimation over an Mlp's parameters.
class Adam {
public:
    Adam() = default;
    Adam(const Mlp& net, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
         double epsilon = 1e-8);

    void step(Mlp& net, const MlpGradient& grad);
    double learning_rate() const { return lr_; }
    std::uint64_t steps() const { return t_; }

    void save(std::ostream& out) const;
    static Adam load(std::istream& in);

private:
    double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::uint64_t t_ = 0;
    std::vector<DenseLayer> m_, v_;
};

}  // namespace glova
