#pragma once

// A small reverse-mode gradient tape over dense row-major matrices. Every op
// records its output value plus a closure that pushes the output gradient
// back into its inputs; `backward` replays the closures in reverse order.
//
// The tape is templated on the scalar so the same model code runs in float
// for training and in double for finite-difference gradient checks.

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "styleforge/error.hpp"
#include "styleforge/rng.hpp"

namespace styleforge::nn {

template <typename T> using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Var {
    std::size_t id = 0;
};

/// Describes how rows of a stacked query matrix attend to rows of a stacked
/// key/value matrix: each segment pairs a block of query rows with a block of
/// key rows (one segment per sequence in the batch).
struct AttentionLayout {
    struct Segment {
        std::size_t q_offset = 0;
        std::size_t q_length = 0;
        std::size_t k_offset = 0;
        std::size_t k_length = 0;
    };
    std::vector<Segment> segments;
    std::vector<unsigned char> key_valid; // one flag per key row; empty = all valid
    bool causal = false;                  // query i sees keys 0..i of its segment
    std::size_t heads = 1;
};

/// Attention weights of one call, one (q_length × k_length) matrix per
/// segment and head, segment-major.
template <typename T> using AttentionProbe = std::vector<Matrix<T>>;

template <typename T> class Tape {
  public:
    Tape() = default;
    Tape(const Tape &) = delete;
    Tape &operator=(const Tape &) = delete;

    Var leaf(Matrix<T> value) { return push(std::move(value), nullptr); }

    const Matrix<T> &value(Var v) const { return nodes_[v.id].value; }

    bool has_grad(Var v) const { return nodes_[v.id].grad.size() > 0; }

    Matrix<T> &grad(Var v) {
        auto &n = nodes_[v.id];
        if (n.grad.size() == 0) n.grad = Matrix<T>::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    std::size_t size() const { return nodes_.size(); }

    void backward(Var loss) {
        if (value(loss).size() != 1) throw Error(Errc::Shape, "backward needs a scalar");
        grad(loss).setOnes();
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            auto &n = nodes_[i];
            if (n.backward && n.grad.size() > 0) n.backward();
        }
    }

    // -- linear algebra -----------------------------------------------------

    Var matmul(Var a, Var b) {
        check(value(a).cols() == value(b).rows(), "matmul inner dimensions differ");
        Matrix<T> out = value(a) * value(b);
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, a, b, o] {
            const auto &g = nodes_[o].grad;
            grad(a).noalias() += g * value(b).transpose();
            grad(b).noalias() += value(a).transpose() * g;
        });
    }

    /// a · bᵀ
    Var matmul_nt(Var a, Var b) {
        check(value(a).cols() == value(b).cols(), "matmul_nt inner dimensions differ");
        Matrix<T> out = value(a) * value(b).transpose();
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, a, b, o] {
            const auto &g = nodes_[o].grad;
            grad(a).noalias() += g * value(b);
            grad(b).noalias() += g.transpose() * value(a);
        });
    }

    Var add(Var a, Var b) {
        check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add shapes differ");
        Matrix<T> out = value(a) + value(b);
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, a, b, o] {
            const auto &g = nodes_[o].grad;
            grad(a) += g;
            grad(b) += g;
        });
    }

    /// Adds a 1×cols row to every row of x.
    Var add_bias(Var x, Var bias) {
        check(value(bias).rows() == 1 && value(bias).cols() == value(x).cols(), "bias shape");
        Matrix<T> out = value(x).rowwise() + value(bias).row(0);
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, x, bias, o] {
            const auto &g = nodes_[o].grad;
            grad(x) += g;
            grad(bias) += g.colwise().sum();
        });
    }

    /// Rows of `table` selected by `rows` (embedding lookup).
    Var gather_rows(Var table, std::vector<std::size_t> rows) {
        const auto &tv = value(table);
        Matrix<T> out(static_cast<Eigen::Index>(rows.size()), tv.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            check(rows[i] < static_cast<std::size_t>(tv.rows()), "gather index out of range");
            out.row(static_cast<Eigen::Index>(i)) = tv.row(static_cast<Eigen::Index>(rows[i]));
        }
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, table, rows = std::move(rows), o] {
            const auto &g = nodes_[o].grad;
            auto &gt = grad(table);
            for (std::size_t i = 0; i < rows.size(); ++i)
                gt.row(static_cast<Eigen::Index>(rows[i])) += g.row(static_cast<Eigen::Index>(i));
        });
    }

    // -- elementwise and normalization ---------------------------------------

    /// Exact GELU, x·Φ(x).
    Var gelu(Var x) {
        const auto &xv = value(x);
        Matrix<T> out(xv.rows(), xv.cols());
        const T inv_sqrt2 = static_cast<T>(0.70710678118654752440);
        for (Eigen::Index i = 0; i < xv.size(); ++i) {
            const T u = xv.data()[i];
            out.data()[i] = static_cast<T>(0.5) * u * (static_cast<T>(1) + std::erf(u * inv_sqrt2));
        }
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, x, o, inv_sqrt2] {
            const auto &g = nodes_[o].grad;
            const auto &xv = value(x);
            auto &gx = grad(x);
            const T inv_sqrt_2pi = static_cast<T>(0.39894228040143267794);
            for (Eigen::Index i = 0; i < xv.size(); ++i) {
                const T u = xv.data()[i];
                const T cdf = static_cast<T>(0.5) * (static_cast<T>(1) + std::erf(u * inv_sqrt2));
                const T pdf = inv_sqrt_2pi * std::exp(static_cast<T>(-0.5) * u * u);
                gx.data()[i] += g.data()[i] * (cdf + u * pdf);
            }
        });
    }

    /// Row-wise layer normalization with a learned gain and bias (1×cols).
    Var layer_norm(Var x, Var gain, Var bias, T eps = static_cast<T>(1e-5)) {
        const auto &xv = value(x);
        const Eigen::Index rows = xv.rows(), cols = xv.cols();
        check(value(gain).cols() == cols && value(bias).cols() == cols, "layer_norm parameter shape");
        auto xhat = std::make_shared<Matrix<T>>(rows, cols);
        auto rstd = std::make_shared<std::vector<T>>(static_cast<std::size_t>(rows));
        for (Eigen::Index r = 0; r < rows; ++r) {
            const T mean = xv.row(r).mean();
            const T var = (xv.row(r).array() - mean).square().mean();
            const T s = static_cast<T>(1) / std::sqrt(var + eps);
            (*rstd)[static_cast<std::size_t>(r)] = s;
            xhat->row(r) = (xv.row(r).array() - mean) * s;
        }
        Matrix<T> out = (xhat->array().rowwise() * value(gain).row(0).array()).rowwise() + value(bias).row(0).array();
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, x, gain, bias, o, xhat, rstd] {
            const auto &g = nodes_[o].grad;
            grad(bias) += g.colwise().sum();
            grad(gain) += (g.array() * xhat->array()).colwise().sum().matrix();
            auto &gx = grad(x);
            const auto gv = value(gain).row(0).array();
            const T n = static_cast<T>(g.cols());
            for (Eigen::Index r = 0; r < g.rows(); ++r) {
                const auto dxhat = (g.row(r).array() * gv).eval();
                const T m1 = dxhat.sum() / n;
                const T m2 = (dxhat * xhat->row(r).array()).sum() / n;
                gx.row(r).array() += (*rstd)[static_cast<std::size_t>(r)] * (dxhat - m1 - xhat->row(r).array() * m2);
            }
        });
    }

    /// Inverted dropout; identity when p == 0.
    Var dropout(Var x, T p, Rng &rng) {
        if (p <= static_cast<T>(0)) return x;
        const auto &xv = value(x);
        auto mask = std::make_shared<Matrix<T>>(xv.rows(), xv.cols());
        const T scale = static_cast<T>(1) / (static_cast<T>(1) - p);
        for (Eigen::Index i = 0; i < xv.size(); ++i)
            mask->data()[i] = rng.uniform() < static_cast<double>(p) ? static_cast<T>(0) : scale;
        Matrix<T> out = xv.cwiseProduct(*mask);
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, x, o, mask] { grad(x) += nodes_[o].grad.cwiseProduct(*mask); });
    }

    // -- attention -----------------------------------------------------------

    /// Multi-head scaled dot-product attention over stacked rows. Masked keys
    /// get weight exactly 0; a query row with no visible key outputs zeros.
    Var attention(Var q, Var k, Var v, const AttentionLayout &layout, AttentionProbe<T> *probe = nullptr) {
        const auto &qv = value(q);
        const auto &kv = value(k);
        const auto &vv = value(v);
        const Eigen::Index d = qv.cols();
        check(kv.cols() == d && vv.cols() == d && kv.rows() == vv.rows(), "attention operand shapes");
        check(layout.heads >= 1 && d % static_cast<Eigen::Index>(layout.heads) == 0, "heads must divide width");
        check(layout.key_valid.empty() || layout.key_valid.size() == static_cast<std::size_t>(kv.rows()),
              "key mask length");
        const Eigen::Index dh = d / static_cast<Eigen::Index>(layout.heads);
        const T scale = static_cast<T>(1) / std::sqrt(static_cast<T>(dh));

        auto probs = std::make_shared<std::vector<Matrix<T>>>();
        Matrix<T> out = Matrix<T>::Zero(qv.rows(), d);
        for (const auto &seg : layout.segments) {
            const auto qo = static_cast<Eigen::Index>(seg.q_offset), ql = static_cast<Eigen::Index>(seg.q_length);
            const auto ko = static_cast<Eigen::Index>(seg.k_offset), kl = static_cast<Eigen::Index>(seg.k_length);
            for (std::size_t h = 0; h < layout.heads; ++h) {
                const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
                Matrix<T> s = (qv.block(qo, c0, ql, dh) * kv.block(ko, c0, kl, dh).transpose()) * scale;
                for (Eigen::Index i = 0; i < ql; ++i) {
                    T mx = -std::numeric_limits<T>::infinity();
                    for (Eigen::Index j = 0; j < kl; ++j) {
                        if (!visible(layout, seg, i, j)) continue;
                        mx = std::max(mx, s(i, j));
                    }
                    T sum = 0;
                    for (Eigen::Index j = 0; j < kl; ++j) {
                        if (!visible(layout, seg, i, j) || mx == -std::numeric_limits<T>::infinity()) {
                            s(i, j) = 0;
                            continue;
                        }
                        s(i, j) = std::exp(s(i, j) - mx);
                        sum += s(i, j);
                    }
                    if (sum > 0) s.row(i) /= sum;
                }
                out.block(qo, c0, ql, dh).noalias() = s * vv.block(ko, c0, kl, dh);
                probs->push_back(std::move(s));
            }
        }
        if (probe) *probe = *probs;
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, q, k, v, o, probs, layout, dh, scale] {
            const auto &g = nodes_[o].grad;
            const auto &qv = value(q);
            const auto &kv = value(k);
            const auto &vv = value(v);
            auto &gq = grad(q);
            auto &gk = grad(k);
            auto &gv = grad(v);
            std::size_t idx = 0;
            for (const auto &seg : layout.segments) {
                const auto qo = static_cast<Eigen::Index>(seg.q_offset), ql = static_cast<Eigen::Index>(seg.q_length);
                const auto ko = static_cast<Eigen::Index>(seg.k_offset), kl = static_cast<Eigen::Index>(seg.k_length);
                for (std::size_t h = 0; h < layout.heads; ++h, ++idx) {
                    const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
                    const auto &p = (*probs)[idx];
                    const auto go = g.block(qo, c0, ql, dh);
                    gv.block(ko, c0, kl, dh).noalias() += p.transpose() * go;
                    Matrix<T> dp = go * vv.block(ko, c0, kl, dh).transpose();
                    const Eigen::Matrix<T, Eigen::Dynamic, 1> rowdot = (dp.array() * p.array()).rowwise().sum();
                    Matrix<T> ds = (p.array() * (dp.array().colwise() - rowdot.array())).matrix() * scale;
                    gq.block(qo, c0, ql, dh).noalias() += ds * kv.block(ko, c0, kl, dh);
                    gk.block(ko, c0, kl, dh).noalias() += ds.transpose() * qv.block(qo, c0, ql, dh);
                }
            }
        });
    }

    // -- loss ----------------------------------------------------------------

    /// Mean over rows of -log softmax(logits)[target].
    Var cross_entropy(Var logits, std::vector<std::size_t> targets) {
        const auto &lv = value(logits);
        check(static_cast<std::size_t>(lv.rows()) == targets.size(), "one target per logit row");
        if (targets.empty()) throw Error(Errc::EmptyTargets, "cross-entropy over zero targets");
        auto softmax = std::make_shared<Matrix<T>>(lv.rows(), lv.cols());
        double total = 0.0;
        for (Eigen::Index r = 0; r < lv.rows(); ++r) {
            const auto t = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(r)]);
            check(t < lv.cols(), "target id outside vocabulary");
            const T mx = lv.row(r).maxCoeff();
            softmax->row(r) = (lv.row(r).array() - mx).exp();
            const T sum = softmax->row(r).sum();
            softmax->row(r) /= sum;
            total += static_cast<double>(std::log(sum) + mx - lv(r, t));
        }
        Matrix<T> out(1, 1);
        out(0, 0) = static_cast<T>(total / static_cast<double>(targets.size()));
        const std::size_t o = nodes_.size();
        return push(std::move(out), [this, logits, o, softmax, targets = std::move(targets)] {
            const T g = nodes_[o].grad(0, 0) / static_cast<T>(targets.size());
            auto &gl = grad(logits);
            gl += *softmax * g;
            for (std::size_t r = 0; r < targets.size(); ++r)
                gl(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(targets[r])) -= g;
        });
    }

  private:
    struct Node {
        Matrix<T> value;
        Matrix<T> grad;
        std::function<void()> backward;
    };

    static bool visible(const AttentionLayout &layout, const AttentionLayout::Segment &seg, Eigen::Index i,
                        Eigen::Index j) {
        if (layout.causal && j > i) return false;
        return layout.key_valid.empty() || layout.key_valid[seg.k_offset + static_cast<std::size_t>(j)] != 0;
    }

    static void check(bool ok, const char *what) {
        if (!ok) throw Error(Errc::Shape, what);
    }

    Var push(Matrix<T> value, std::function<void()> backward) {
        nodes_.push_back(Node{std::move(value), Matrix<T>(), std::move(backward)});
        return Var{nodes_.size() - 1};
    }

    std::deque<Node> nodes_;
};

} // namespace styleforge::nn
