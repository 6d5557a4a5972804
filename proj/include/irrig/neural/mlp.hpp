#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "irrig/common/error.hpp"
#include "irrig/common/rng.hpp"

namespace irrig::neural {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class ShapeMismatch : public LengthMismatch {
public:
    using LengthMismatch::LengthMismatch;
};

struct Dense {
    Mat W;  ///< out x in
    Vec b;
};

/// Intermediate activations of a batched forward pass, one sample per column.
struct Tape {
    std::vector<Mat> a;  ///< a[0] = input, a[l] = output of layer l (tanh for hidden, affine for the last)
};

/// Gradient container shaped like the network.
struct MlpGrad {
    std::vector<Dense> layers;
    void zero();
};

/// Dense feed-forward net: tanh on hidden layers, affine output.
class Mlp {
public:
    Mlp() = default;
    /// Zero-initialized net with the given layer sizes (input first, output last).
    explicit Mlp(std::vector<int> sizes);
    /// Orthogonal init: hidden layers gain sqrt(2), output layer `output_gain`, zero biases.
    Mlp(std::vector<int> sizes, Rng& rng, double output_gain);

    const std::vector<int>& sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    std::vector<Dense>& layers() { return layers_; }
    const std::vector<Dense>& layers() const { return layers_; }

    Vec forward(const Vec& x) const;
    Mat forward_batch(const Mat& X, Tape* tape = nullptr) const;

    /// Accumulates dL/dparams into `grad` given dL/doutput G; returns dL/dinput.
    Mat backward(const Tape& tape, const Mat& G, MlpGrad& grad) const;

    MlpGrad make_grad() const;

    /// Flat views over every weight and bias, in a fixed order.
    std::vector<std::span<double>> parameters();
    static std::vector<std::span<double>> views(MlpGrad& grad);

    std::size_t parameter_count() const;

private:
    std::vector<int> sizes_;
    std::vector<Dense> layers_;
};

/// Orthogonal (rows x cols) matrix scaled by `gain`.
Mat orthogonal(int rows, int cols, double gain, Rng& rng);

/// Affine map to [-2, 2] with clipping.
class MinMaxNormalizer {
public:
    MinMaxNormalizer() = default;
    MinMaxNormalizer(Vec lo, Vec hi);

    Vec operator()(const Vec& z) const;
    int size() const { return static_cast<int>(lo_.size()); }
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }

private:
    Vec lo_;
    Vec hi_;
};

class DegenerateBounds : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

}  // namespace irrig::neural
