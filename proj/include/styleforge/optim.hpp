#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "styleforge/autograd.hpp"
#include "styleforge/error.hpp"

namespace styleforge {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T> struct OptimizerState {
    std::vector<nn::Matrix<T>> m;
    std::vector<nn::Matrix<T>> v;
    std::uint64_t step = 0;
};

/// One bias-corrected Adam update. `names` (optional) label arrays in the
/// non-finite-gradient diagnostic. The gradients are checked before any
/// parameter is touched, so a failed step leaves everything unchanged.
template <typename T>
void adam_step(OptimizerState<T> &state, const std::vector<nn::Matrix<T> *> &params,
               const std::vector<nn::Matrix<T>> &grads, const AdamConfig &cfg,
               const std::vector<std::string> *names = nullptr) {
    if (params.size() != grads.size()) throw Error(Errc::Shape, "one gradient per parameter array required");
    if (state.m.empty()) {
        for (const auto *p : params) {
            state.m.push_back(nn::Matrix<T>::Zero(p->rows(), p->cols()));
            state.v.push_back(nn::Matrix<T>::Zero(p->rows(), p->cols()));
        }
    }
    if (state.m.size() != params.size()) throw Error(Errc::Shape, "optimizer state does not match parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto &p = *params[i];
        if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() || state.m[i].rows() != p.rows() ||
            state.m[i].cols() != p.cols())
            throw Error(Errc::Shape, "gradient shape differs from parameter " +
                                         (names ? (*names)[i] : std::to_string(i)));
        if (!grads[i].allFinite())
            throw Error(Errc::NonFiniteGradient, "non-finite gradient in " + (names ? (*names)[i] : std::to_string(i)) +
                                                     " at step " + std::to_string(state.step + 1));
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T c1 = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
    const T c2 = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
    const T lr = static_cast<T>(cfg.learning_rate), eps = static_cast<T>(cfg.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto &m = state.m[i];
        auto &v = state.v[i];
        const auto &g = grads[i];
        m = b1 * m + (T(1) - b1) * g;
        v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
        params[i]->array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
}

} // namespace styleforge
