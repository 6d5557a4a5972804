#include "irrig/neural/mlp.hpp"

#include <cmath>

namespace irrig::neural {

void MlpGrad::zero() {
    for (auto& l : layers) {
        l.W.setZero();
        l.b.setZero();
    }
}

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw InvalidArgument("mlp needs at least input and output sizes");
    for (int s : sizes_) {
        if (s < 1) throw InvalidArgument("mlp layer sizes must be positive");
    }
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        layers_.push_back({Mat::Zero(sizes_[l], sizes_[l - 1]), Vec::Zero(sizes_[l])});
    }
}

Mlp::Mlp(std::vector<int> sizes, Rng& rng, double output_gain) : Mlp(std::move(sizes)) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const bool last = l + 1 == layers_.size();
        layers_[l].W = orthogonal(static_cast<int>(layers_[l].W.rows()), static_cast<int>(layers_[l].W.cols()),
                                  last ? output_gain : std::sqrt(2.0), rng);
    }
}

Vec Mlp::forward(const Vec& x) const {
    if (x.size() != input_size()) throw ShapeMismatch("mlp input size mismatch");
    Vec a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Vec z = layers_[l].W * a + layers_[l].b;
        a = (l + 1 == layers_.size()) ? z : Vec(z.array().tanh());
    }
    return a;
}

Mat Mlp::forward_batch(const Mat& X, Tape* tape) const {
    if (X.rows() != input_size()) throw ShapeMismatch("mlp input size mismatch");
    Mat a = X;
    if (tape) {
        tape->a.clear();
        tape->a.push_back(X);
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Mat z = layers_[l].W * a;
        z.colwise() += layers_[l].b;
        if (l + 1 != layers_.size()) z = z.array().tanh();
        a = std::move(z);
        if (tape) tape->a.push_back(a);
    }
    return a;
}

Mat Mlp::backward(const Tape& tape, const Mat& G, MlpGrad& grad) const {
    if (tape.a.size() != layers_.size() + 1) throw ShapeMismatch("tape does not match network");
    if (G.rows() != output_size() || G.cols() != tape.a.back().cols()) throw ShapeMismatch("output gradient shape");
    Mat delta = G;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        if (l + 1 != layers_.size()) delta = delta.array() * (1.0 - tape.a[l + 1].array().square());
        grad.layers[l].W.noalias() += delta * tape.a[l].transpose();
        grad.layers[l].b += delta.rowwise().sum();
        delta = layers_[l].W.transpose() * delta;
    }
    return delta;
}

MlpGrad Mlp::make_grad() const {
    MlpGrad g;
    for (const auto& l : layers_) g.layers.push_back({Mat::Zero(l.W.rows(), l.W.cols()), Vec::Zero(l.b.size())});
    return g;
}

std::vector<std::span<double>> Mlp::parameters() {
    std::vector<std::span<double>> out;
    for (auto& l : layers_) {
        out.emplace_back(l.W.data(), static_cast<std::size_t>(l.W.size()));
        out.emplace_back(l.b.data(), static_cast<std::size_t>(l.b.size()));
    }
    return out;
}

std::vector<std::span<double>> Mlp::views(MlpGrad& grad) {
    std::vector<std::span<double>> out;
    for (auto& l : grad.layers) {
        out.emplace_back(l.W.data(), static_cast<std::size_t>(l.W.size()));
        out.emplace_back(l.b.data(), static_cast<std::size_t>(l.b.size()));
    }
    return out;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
}

Mat orthogonal(int rows, int cols, double gain, Rng& rng) {
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    Mat A(big, small);
    for (int j = 0; j < small; ++j) {
        for (int i = 0; i < big; ++i) A(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Mat> qr(A);
    Mat Q = qr.householderQ() * Mat::Identity(big, small);
    const Mat R = qr.matrixQR().topLeftCorner(small, small);
    for (int j = 0; j < small; ++j) {
        if (R(j, j) < 0.0) Q.col(j) *= -1.0;
    }
    Mat W = rows >= cols ? Q : Mat(Q.transpose());
    return gain * W;
}

MinMaxNormalizer::MinMaxNormalizer(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size()) throw ShapeMismatch("normalizer bounds length mismatch");
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
        if (!(lo_[i] < hi_[i])) throw DegenerateBounds("normalizer requires min < max in dimension " + std::to_string(i));
    }
}

Vec MinMaxNormalizer::operator()(const Vec& z) const {
    if (z.size() != lo_.size()) throw ShapeMismatch("normalizer input size mismatch");
    Vec x = -2.0 + 4.0 * ((z - lo_).array() / (hi_ - lo_).array());
    return x.cwiseMax(-2.0).cwiseMin(2.0);
}

}  // namespace irrig::neural
