#include "sfr/nn/tensor.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "sfr/errors.hpp"

namespace sfr::nn {

namespace {

thread_local bool g_grad_enabled = true;

std::string shape_str(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeMismatch(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) + " differ");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846); }

double softplus_scalar(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void detail::Node::accumulate(const Matrix& g) {
    if (grad.size() == 0)
        grad = g;
    else
        grad += g;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::constant(Matrix value, int rank) {
    Tensor t;
    t.node_ = std::make_shared<detail::Node>();
    t.node_->value = std::move(value);
    t.node_->rank = rank;
    return t;
}

Tensor Tensor::parameter(Matrix value, int rank) {
    Tensor t = constant(std::move(value), rank);
    t.node_->requires_grad = true;
    return t;
}

Matrix Tensor::grad() const {
    if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
    return node_->grad;
}

std::vector<Eigen::Index> Tensor::shape() const {
    switch (node_->rank) {
        case 0: return {};
        case 1: return {cols()};
        default: return {rows(), cols()};
    }
}

Tensor Tensor::make(Matrix value, std::vector<Tensor> parents, std::function<void(detail::Node&)> backward) {
    Tensor t = constant(std::move(value));
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (g_grad_enabled && any) {
        t.node_->requires_grad = true;
        for (auto& p : parents) t.node_->parents.push_back(p.node_);
        t.node_->backward = std::move(backward);
    }
    return t;
}

void Tensor::backward() const {
    if (rows() != 1 || cols() != 1) throw ShapeMismatch("backward() needs a scalar, got " + shape_str(*this));
    if (!requires_grad()) return;
    // Iterative post-order DFS gives a topological order.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            detail::Node* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->accumulate(Matrix::Ones(1, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward && n->grad.size() != 0) n->backward(*n);
    }
}

// Each op captures its parents' nodes through `self.parents` in the closure.

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw ShapeMismatch("matmul: " + shape_str(a) + " * " + shape_str(b));
    return Tensor::make(a.value() * b.value(), {a, b}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) pa.accumulate(self.grad * pb.value.transpose());
        if (pb.requires_grad) pb.accumulate(pa.value.transpose() * self.grad);
    });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) throw ShapeMismatch("matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
    return Tensor::make(a.value() * b.value().transpose(), {a, b}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) pa.accumulate(self.grad * pb.value);
        if (pb.requires_grad) pb.accumulate(self.grad.transpose() * pa.value);
    });
}

Tensor transpose(const Tensor& a) {
    return Tensor::make(a.value().transpose(), {a},
                        [](detail::Node& self) { self.parents[0]->accumulate(self.grad.transpose()); });
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols()) {
        Matrix v = a.value().rowwise() + b.value().row(0);
        return Tensor::make(std::move(v), {a, b}, [](detail::Node& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) pa.accumulate(self.grad);
            if (pb.requires_grad) pb.accumulate(self.grad.colwise().sum());
        });
    }
    require_same_shape(a, b, "add");
    return Tensor::make(a.value() + b.value(), {a, b}, [](detail::Node& self) {
        for (auto& p : self.parents)
            if (p->requires_grad) p->accumulate(self.grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    return Tensor::make(a.value() - b.value(), {a, b}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) pa.accumulate(self.grad);
        if (pb.requires_grad) pb.accumulate(-self.grad);
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    return Tensor::make(a.value().cwiseProduct(b.value()), {a, b}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) pa.accumulate(self.grad.cwiseProduct(pb.value));
        if (pb.requires_grad) pb.accumulate(self.grad.cwiseProduct(pa.value));
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "div");
    return Tensor::make(a.value().cwiseQuotient(b.value()), {a, b}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) pa.accumulate(self.grad.cwiseQuotient(pb.value));
        if (pb.requires_grad) pb.accumulate(-self.grad.cwiseProduct(self.value).cwiseQuotient(pb.value));
    });
}

Tensor scale(const Tensor& a, double s) {
    return Tensor::make(a.value() * s, {a}, [s](detail::Node& self) { self.parents[0]->accumulate(self.grad * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
    return Tensor::make(a.value().array() + s, {a},
                        [](detail::Node& self) { self.parents[0]->accumulate(self.grad); });
}

Tensor square(const Tensor& a) {
    return Tensor::make(a.value().cwiseAbs2(), {a}, [](detail::Node& self) {
        auto& p = *self.parents[0];
        p.accumulate(2.0 * self.grad.cwiseProduct(p.value));
    });
}

Tensor exp(const Tensor& a) {
    Matrix v = a.value().array().exp();
    return Tensor::make(v, {a}, [](detail::Node& self) { self.parents[0]->accumulate(self.grad.cwiseProduct(self.value)); });
}

Tensor log(const Tensor& a) {
    return Tensor::make(a.value().array().log(), {a}, [](detail::Node& self) {
        auto& p = *self.parents[0];
        p.accumulate(self.grad.cwiseQuotient(p.value));
    });
}

Tensor gelu(const Tensor& a) {
    Matrix v = a.value().unaryExpr([](double x) { return x * normal_cdf(x); });
    return Tensor::make(std::move(v), {a}, [](detail::Node& self) {
        auto& p = *self.parents[0];
        p.accumulate(self.grad.cwiseProduct(
            p.value.unaryExpr([](double x) { return normal_cdf(x) + x * normal_pdf(x); })));
    });
}

Tensor softplus(const Tensor& a) {
    return Tensor::make(a.value().unaryExpr(&softplus_scalar), {a}, [](detail::Node& self) {
        auto& p = *self.parents[0];
        p.accumulate(self.grad.cwiseProduct(p.value.unaryExpr(&sigmoid)));
    });
}

Tensor softmax_rows(const Tensor& a) {
    Matrix v = a.value();
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double mx = v.row(r).maxCoeff();
        v.row(r) = (v.row(r).array() - mx).exp();
        v.row(r) /= v.row(r).sum();
    }
    return Tensor::make(std::move(v), {a}, [](detail::Node& self) {
        const Matrix& s = self.value;
        const Eigen::VectorXd inner = self.grad.cwiseProduct(s).rowwise().sum();
        Matrix g = self.grad;
        g.colwise() -= inner;
        self.parents[0]->accumulate(g.cwiseProduct(s));
    });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: no inputs");
    Eigen::Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != parts.front().rows()) throw ShapeMismatch("concat_cols: row counts differ");
        cols += p.cols();
    }
    Matrix v(parts.front().rows(), cols);
    std::vector<Eigen::Index> offsets;
    Eigen::Index off = 0;
    for (const auto& p : parts) {
        v.middleCols(off, p.cols()) = p.value();
        offsets.push_back(off);
        off += p.cols();
    }
    return Tensor::make(std::move(v), {parts.begin(), parts.end()}, [offsets](detail::Node& self) {
        for (std::size_t i = 0; i < self.parents.size(); ++i) {
            auto& p = *self.parents[i];
            if (p.requires_grad) p.accumulate(self.grad.middleCols(offsets[i], p.value.cols()));
        }
    });
}

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) throw ShapeMismatch("slice_cols: out of range");
    return Tensor::make(a.value().middleCols(start, count), {a}, [start, count](detail::Node& self) {
        auto& p = *self.parents[0];
        Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
        g.middleCols(start, count) = self.grad;
        p.accumulate(g);
    });
}

Tensor mean_rows(const Tensor& a) {
    const double n = static_cast<double>(a.rows());
    return Tensor::make(a.value().colwise().sum() / n, {a}, [n](detail::Node& self) {
        auto& p = *self.parents[0];
        p.accumulate(self.grad.replicate(p.value.rows(), 1) / n);
    });
}

Tensor broadcast_rows(const Tensor& row, Eigen::Index n) {
    if (row.rows() != 1) throw ShapeMismatch("broadcast_rows: input must be a single row");
    return Tensor::make(row.value().replicate(n, 1), {row},
                        [](detail::Node& self) { self.parents[0]->accumulate(self.grad.colwise().sum()); });
}

Tensor sum(const Tensor& a) {
    Tensor t = Tensor::make(Matrix::Constant(1, 1, a.value().sum()), {a}, [](detail::Node& self) {
        auto& p = *self.parents[0];
        p.accumulate(Matrix::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0)));
    });
    t.node()->rank = 0;
    return t;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

}  // namespace sfr::nn
