#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace sfr::nn {

using Matrix = Eigen::MatrixXd;

namespace detail {

struct Node {
    Matrix value;
    Matrix grad;  // empty until a gradient reaches the node
    bool requires_grad = false;
    int rank = 2;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    void accumulate(const Matrix& g);
};

}  // namespace detail

/// Double-precision tensor of rank <= 2 on a reverse-mode tape. Rank-1
/// tensors are stored as 1 x n rows; scalars as 1 x 1.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Matrix value, int rank = 2);
    /// Leaf that accumulates gradients across backward() calls.
    static Tensor parameter(Matrix value, int rank = 2);
    static Tensor scalar(double v) { return constant(Matrix::Constant(1, 1, v), 0); }

    bool defined() const { return node_ != nullptr; }
    const Matrix& value() const { return node_->value; }
    Matrix& mutable_value() { return node_->value; }
    /// Gradient buffer; a zero matrix of the value's shape if nothing arrived.
    Matrix grad() const;
    bool has_grad() const { return node_->grad.size() != 0; }
    bool requires_grad() const { return node_->requires_grad; }
    void zero_grad() { node_->grad.resize(0, 0); }

    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    int rank() const { return node_->rank; }
    std::vector<Eigen::Index> shape() const;
    double item() const { return node_->value(0, 0); }

    /// Seeds d(this)/d(this) = 1 (this must be 1 x 1) and runs the tape backwards.
    void backward() const;

    static Tensor make(Matrix value, std::vector<Tensor> parents, std::function<void(detail::Node&)> backward);
    const std::shared_ptr<detail::Node>& node() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

/// Disables tape recording in the current thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Elementwise sum; a 1 x c right operand broadcasts over the rows of `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
/// x * Phi(x) with the exact erf form of the normal CDF.
Tensor gelu(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count);
Tensor mean_rows(const Tensor& a);
Tensor broadcast_rows(const Tensor& row, Eigen::Index n);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }

}  // namespace sfr::nn
