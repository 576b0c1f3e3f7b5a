#include "sfr/nn/adam.hpp"

#include <cmath>

#include "sfr/errors.hpp"

namespace sfr::nn {

double LrSchedule::operator()(int epoch) const {
    if (epoch < 0) throw InvalidInput("learning-rate schedule: negative epoch");
    if (epoch >= decay_epoch) return decayed_lr;
    if (epoch < warmup_epochs) {
        const double t = static_cast<double>(epoch - warmup_epochs) / warmup_epochs;
        return std::min(base_lr, base_lr * std::exp(t * std::log(10.0)));
    }
    return base_lr;
}

void LrSchedule::validate() const {
    if (!(base_lr > 0.0) || !(decayed_lr > 0.0)) throw InvalidInput("learning rates must be positive");
    if (warmup_epochs < 0 || decay_epoch < 0) throw InvalidInput("schedule epochs must be non-negative");
}

OptimizerState OptimizerState::for_store(const ParameterStore& store, LrSchedule schedule) {
    OptimizerState s;
    s.schedule = schedule;
    for (const auto& e : store.entries()) {
        s.m.push_back(Matrix::Zero(e.tensor.rows(), e.tensor.cols()));
        s.v.push_back(Matrix::Zero(e.tensor.rows(), e.tensor.cols()));
    }
    return s;
}

double adam_step(OptimizerState& state, ParameterStore& store, int epoch) {
    auto& entries = store.entries();
    if (state.m.size() != entries.size() || state.v.size() != entries.size())
        throw ShapeMismatch("adam: optimizer state does not match the parameter store");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Tensor& p = entries[i].tensor;
        if (state.m[i].rows() != p.rows() || state.m[i].cols() != p.cols() || state.v[i].rows() != p.rows() ||
            state.v[i].cols() != p.cols())
            throw ShapeMismatch("adam: moment shape mismatch for '" + entries[i].name + "'");
        if (p.has_grad() && !p.node()->grad.allFinite())
            throw NonFinite("adam: non-finite gradient for '" + entries[i].name + "'");
    }

    const double lr = state.schedule(epoch);
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Tensor& p = entries[i].tensor;
        Matrix& m = state.m[i];
        Matrix& v = state.v[i];
        if (p.has_grad()) {
            const Matrix& g = p.node()->grad;
            m = state.beta1 * m + (1.0 - state.beta1) * g;
            v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseAbs2();
        } else {
            m *= state.beta1;
            v *= state.beta2;
        }
        Matrix& w = p.mutable_value();
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                const double mh = m(r, c) / c1;
                const double vh = v(r, c) / c2;
                w(r, c) -= lr * mh / (std::sqrt(vh) + state.eps);
            }
    }
    return lr;
}

}  // namespace sfr::nn
