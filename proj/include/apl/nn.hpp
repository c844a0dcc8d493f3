#pragma once

// Minimal neural toolkit: two-hidden-layer ReLU MLPs, full-batch Adam,
// binary cross-entropy classification, Gaussian negative-log-likelihood
// regression with a diagonal covariance head, convergence detection with
// reinitialization restarts, and a finite-difference gradient checker.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "apl/rng.hpp"

namespace apl {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

inline constexpr double kVarFloor = 1e-6;
inline constexpr double kVarCeil = 1e6;

template <typename S>
struct MlpT {
    // layer widths: in -> hidden -> hidden -> out; biases kept as 1-row
    // matrices so all six parameters share one optimizer code path
    MatX<S> w1, b1, w2, b2, w3, b3;

    int in_dim() const { return static_cast<int>(w1.rows()); }
    int out_dim() const { return static_cast<int>(w3.cols()); }

    // Weights i.i.d. N(0, sigma^2) drawn in a fixed row-major order; biases zero.
    void init(int in, int hidden, int out, S sigma, Rng& rng) {
        w1.resize(in, hidden);
        w2.resize(hidden, hidden);
        w3.resize(hidden, out);
        b1 = MatX<S>::Zero(1, hidden);
        b2 = MatX<S>::Zero(1, hidden);
        b3 = MatX<S>::Zero(1, out);
        for (auto* w : {&w1, &w2, &w3})
            for (Eigen::Index r = 0; r < w->rows(); ++r)
                for (Eigen::Index c = 0; c < w->cols(); ++c)
                    (*w)(r, c) = sigma * static_cast<S>(rng.normal());
    }

    MatX<S> forward(const MatX<S>& x) const {
        MatX<S> h1 = ((x * w1).rowwise() + b1.row(0)).cwiseMax(S(0));
        MatX<S> h2 = ((h1 * w2).rowwise() + b2.row(0)).cwiseMax(S(0));
        return (h2 * w3).rowwise() + b3.row(0);
    }

    // classifier head: P(true) for a single input row
    S prob(const VecX<S>& x) const {
        S z = forward(x.transpose())(0, 0);
        return S(1) / (S(1) + std::exp(-z));
    }

    // Gaussian head: per-dimension mean and clamped variance
    void gaussian(const VecX<S>& x, VecX<S>& mean, VecX<S>& var) const {
        MatX<S> raw = forward(x.transpose());
        int d = out_dim() / 2;
        mean.resize(d);
        var.resize(d);
        for (int i = 0; i < d; ++i) {
            mean(i) = raw(0, i);
            var(i) = std::min(std::max(std::exp(raw(0, d + i)), S(kVarFloor)), S(kVarCeil));
        }
    }

    std::vector<MatX<S>*> params() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

    // flat text dump, reloadable across episodes
    std::string to_text() const {
        std::ostringstream os;
        os.precision(17);
        os << w1.rows() << " " << w1.cols() << " " << w3.cols() << "\n";
        for (const auto* m : {&w1, &b1, &w2, &b2, &w3, &b3}) {
            for (Eigen::Index r = 0; r < m->rows(); ++r)
                for (Eigen::Index c = 0; c < m->cols(); ++c) os << double((*m)(r, c)) << " ";
            os << "\n";
        }
        return os.str();
    }

    static MlpT from_text(const std::string& text) {
        std::istringstream is(text);
        int in, hidden, out;
        if (!(is >> in >> hidden >> out)) throw std::invalid_argument("bad mlp dump header");
        MlpT net;
        net.w1.resize(in, hidden); net.b1.resize(1, hidden);
        net.w2.resize(hidden, hidden); net.b2.resize(1, hidden);
        net.w3.resize(hidden, out); net.b3.resize(1, out);
        for (auto* m : net.params())
            for (Eigen::Index r = 0; r < m->rows(); ++r)
                for (Eigen::Index c = 0; c < m->cols(); ++c) {
                    double v;
                    if (!(is >> v)) throw std::invalid_argument("truncated mlp dump");
                    (*m)(r, c) = static_cast<S>(v);
                }
        return net;
    }
};

using Mlp = MlpT<float>;

// Reference Adam update (Kingma & Ba) with bias correction.
template <typename S>
struct AdamT {
    S lr, beta1, beta2, eps;
    long t = 0;
    std::vector<MatX<S>> m, v;

    AdamT(S lr_, S b1, S b2, S eps_) : lr(lr_), beta1(b1), beta2(b2), eps(eps_) {}

    void attach(const std::vector<MatX<S>*>& params) {
        m.clear();
        v.clear();
        t = 0;
        for (auto* p : params) {
            m.push_back(MatX<S>::Zero(p->rows(), p->cols()));
            v.push_back(MatX<S>::Zero(p->rows(), p->cols()));
        }
    }

    void step(const std::vector<MatX<S>*>& params, const std::vector<const MatX<S>*>& grads) {
        ++t;
        S c1 = S(1) - static_cast<S>(std::pow(double(beta1), double(t)));
        S c2 = S(1) - static_cast<S>(std::pow(double(beta2), double(t)));
        for (size_t i = 0; i < params.size(); ++i) {
            m[i].array() = beta1 * m[i].array() + (S(1) - beta1) * grads[i]->array();
            v[i].array() = beta2 * v[i].array() + (S(1) - beta2) * grads[i]->array().square();
            params[i]->array() -= lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
        }
    }
};

struct TrainConfig {
    int epochs = 10000;  // paper-scale value is 100000
    double lr = 1e-3;
    double init_sigma = 1.0;  // unit-Gaussian init promotes ensemble diversity
    int max_restarts = 5;     // at most max_restarts + 1 attempts
    double converge_loss = 0.3;
    double converge_ratio = 0.1;  // converged also if final <= ratio * initial
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    int hidden = 32;
};

enum class LossKind { bce, gaussian_nll };

template <typename S>
struct TrainResult {
    MlpT<S> net;
    bool converged = true;
    S final_loss = S(0);
    int attempts = 1;
};

// Full-batch forward/backward with a reusable workspace. Losses are means
// over the batch.
template <typename S>
class Trainer {
public:
    Trainer(MlpT<S>& net, LossKind kind, const MatX<S>& x, const MatX<S>& targets)
        : net_(net), kind_(kind), x_(x), targets_(targets) {
        if (x.rows() == 0) throw std::invalid_argument("empty training set");
        if (x.rows() != targets.rows()) throw std::invalid_argument("input/target row mismatch");
    }

    // returns the batch loss and fills parameter gradients
    S forward_backward() {
        z1.noalias() = x_ * net_.w1;
        z1.rowwise() += net_.b1.row(0);
        h1 = z1.cwiseMax(S(0));
        z2.noalias() = h1 * net_.w2;
        z2.rowwise() += net_.b2.row(0);
        h2 = z2.cwiseMax(S(0));
        z3.noalias() = h2 * net_.w3;
        z3.rowwise() += net_.b3.row(0);

        S loss = loss_and_dout();

        gw3.noalias() = h2.transpose() * dout;
        gb3 = dout.colwise().sum();
        dh2.noalias() = dout * net_.w3.transpose();
        dh2.array() *= (z2.array() > S(0)).template cast<S>();
        gw2.noalias() = h1.transpose() * dh2;
        gb2 = dh2.colwise().sum();
        dh1.noalias() = dh2 * net_.w2.transpose();
        dh1.array() *= (z1.array() > S(0)).template cast<S>();
        gw1.noalias() = x_.transpose() * dh1;
        gb1 = dh1.colwise().sum();
        return loss;
    }

    S loss_only() const {
        MatX<S> raw = net_.forward(x_);
        const Eigen::Index n = raw.rows();
        S total = S(0);
        if (kind_ == LossKind::bce) {
            for (Eigen::Index i = 0; i < n; ++i) total += bce_term(raw(i, 0), targets_(i, 0));
        } else {
            const int d = static_cast<int>(raw.cols()) / 2;
            for (Eigen::Index i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) total += nll_term(raw(i, j), raw(i, d + j), targets_(i, j));
        }
        return total / static_cast<S>(n);
    }

    std::vector<const MatX<S>*> grads() const { return {&gw1, &gb1, &gw2, &gb2, &gw3, &gb3}; }

    MatX<S> gw1, gb1, gw2, gb2, gw3, gb3;

private:
    static S bce_term(S z, S y) {
        // softplus(z) - y*z, computed stably
        return std::max(z, S(0)) + std::log1p(std::exp(-std::abs(z))) - y * z;
    }

    static S nll_term(S mu, S raw_var, S t) {
        S var = std::min(std::max(std::exp(raw_var), S(kVarFloor)), S(kVarCeil));
        S diff = t - mu;
        return S(0.5) * (std::log(S(2) * S(M_PI) * var) + diff * diff / var);
    }

    S loss_and_dout() {
        const Eigen::Index n = z3.rows();
        dout.resize(z3.rows(), z3.cols());
        S total = S(0);
        const S inv_n = S(1) / static_cast<S>(n);
        if (kind_ == LossKind::bce) {
            for (Eigen::Index i = 0; i < n; ++i) {
                S z = z3(i, 0), y = targets_(i, 0);
                total += bce_term(z, y);
                S sig = S(1) / (S(1) + std::exp(-z));
                dout(i, 0) = (sig - y) * inv_n;
            }
        } else {
            const int d = static_cast<int>(z3.cols()) / 2;
            const S clip = S(1e2);
            for (Eigen::Index i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) {
                    S mu = z3(i, j), raw_v = z3(i, d + j), t = targets_(i, j);
                    total += nll_term(mu, raw_v, t);
                    S var = std::exp(raw_v);
                    bool lo = var < S(kVarFloor), hi = var > S(kVarCeil);
                    var = std::min(std::max(var, S(kVarFloor)), S(kVarCeil));
                    S diff = t - mu;
                    S dmu = -diff / var * inv_n;
                    S dvar = S(0.5) * (S(1) - diff * diff / var) * inv_n;
                    // at a clamp boundary, pass only gradients pointing back
                    // into the valid range
                    if ((lo && dvar > S(0)) || (hi && dvar < S(0))) dvar = S(0);
                    dout(i, j) = std::min(std::max(dmu, -clip), clip);
                    dout(i, d + j) = std::min(std::max(dvar, -clip), clip);
                }
        }
        return total * inv_n;
    }

    MlpT<S>& net_;
    LossKind kind_;
    const MatX<S>& x_;
    const MatX<S>& targets_;
    MatX<S> z1, h1, z2, h2, z3, dout, dh2, dh1;
};

// Train with convergence detection: if an attempt fails the criterion,
// reinitialize and retrain, returning the best attempt flagged non-converged
// after max_restarts + 1 tries.
template <typename S>
TrainResult<S> train_mlp(LossKind kind, const MatX<S>& x, const MatX<S>& targets, int out_dim,
                         const TrainConfig& cfg, Rng& rng) {
    TrainResult<S> best;
    S best_loss = std::numeric_limits<S>::infinity();
    const int attempts = cfg.max_restarts + 1;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        MlpT<S> net;
        net.init(static_cast<int>(x.cols()), cfg.hidden, out_dim, S(cfg.init_sigma), rng);
        Trainer<S> trainer(net, kind, x, targets);
        AdamT<S> adam(S(cfg.lr), S(cfg.beta1), S(cfg.beta2), S(cfg.adam_eps));
        auto params = net.params();
        adam.attach(params);
        const S initial_loss = trainer.loss_only();
        for (int e = 0; e < cfg.epochs; ++e) {
            trainer.forward_backward();
            adam.step(params, trainer.grads());
        }
        const S final_loss = trainer.loss_only();
        if (final_loss < S(cfg.converge_loss) || final_loss <= S(cfg.converge_ratio) * initial_loss)
            return {std::move(net), true, final_loss, attempt};
        if (final_loss < best_loss) {
            best_loss = final_loss;
            best = {std::move(net), false, final_loss, attempt};
        }
    }
    best.attempts = attempts;
    return best;
}

template <typename S>
TrainResult<S> train_classifier(const MatX<S>& x, const std::vector<bool>& labels,
                                const TrainConfig& cfg, Rng& rng) {
    if (static_cast<size_t>(x.rows()) != labels.size())
        throw std::invalid_argument("label count mismatch");
    MatX<S> y(x.rows(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) y(i, 0) = labels[i] ? S(1) : S(0);
    return train_mlp(LossKind::bce, x, y, 1, cfg, rng);
}

// Gaussian regressor with input/target standardization folded around the
// MLP; predictions are mapped back to original units (variance by scale^2).
template <typename S>
struct GaussianRegressor {
    MlpT<S> net;
    VecX<S> in_shift, in_scale, out_shift, out_scale;

    void predict(const VecX<S>& x, VecX<S>& mean, VecX<S>& var) const {
        VecX<S> xn = (x - in_shift).cwiseQuotient(in_scale);
        net.gaussian(xn, mean, var);
        mean = mean.cwiseProduct(out_scale) + out_shift;
        var = var.cwiseProduct(out_scale.cwiseProduct(out_scale));
    }
};

template <typename S>
struct RegressorResult {
    GaussianRegressor<S> reg;
    bool converged = true;
    S final_loss = S(0);
    int attempts = 1;
};

template <typename S>
RegressorResult<S> train_gaussian_regressor(const MatX<S>& x, const MatX<S>& targets,
                                            const TrainConfig& cfg, Rng& rng) {
    if (targets.cols() < 1) throw std::invalid_argument("regressor needs >= 1 output dim");
    if (x.rows() == 0) throw std::invalid_argument("empty training set");
    auto standardize = [](const MatX<S>& m, VecX<S>& shift, VecX<S>& scale) {
        shift = m.colwise().mean();
        MatX<S> centered = m.rowwise() - shift.transpose();
        scale = (centered.array().square().colwise().mean()).sqrt();
        scale = scale.cwiseMax(S(1e-6));
        return MatX<S>(centered.array().rowwise() / scale.transpose().array());
    };
    GaussianRegressor<S> reg;
    MatX<S> xn = standardize(x, reg.in_shift, reg.in_scale);
    MatX<S> tn = standardize(targets, reg.out_shift, reg.out_scale);
    auto res = train_mlp(LossKind::gaussian_nll, xn, tn, 2 * static_cast<int>(targets.cols()), cfg, rng);
    reg.net = std::move(res.net);
    return {std::move(reg), res.converged, res.final_loss, res.attempts};
}

// Compares analytic gradients against central finite differences (step 1e-5)
// over every parameter; returns the max relative error.
template <typename S>
S grad_check(MlpT<S>& net, LossKind kind, const MatX<S>& x, const MatX<S>& targets) {
    Trainer<S> trainer(net, kind, x, targets);
    trainer.forward_backward();
    std::vector<MatX<S>> analytic;
    for (const auto* g : trainer.grads()) analytic.push_back(*g);
    const S h = S(1e-5);
    S max_err = S(0);
    auto params = net.params();
    for (size_t p = 0; p < params.size(); ++p)
        for (Eigen::Index r = 0; r < params[p]->rows(); ++r)
            for (Eigen::Index c = 0; c < params[p]->cols(); ++c) {
                S saved = (*params[p])(r, c);
                (*params[p])(r, c) = saved + h;
                S up = trainer.loss_only();
                (*params[p])(r, c) = saved - h;
                S down = trainer.loss_only();
                (*params[p])(r, c) = saved;
                S numeric = (up - down) / (S(2) * h);
                S a = analytic[p](r, c);
                S err = std::abs(a - numeric) / std::max({S(1), std::abs(a), std::abs(numeric)});
                max_err = std::max(max_err, err);
            }
    return max_err;
}

}  // namespace apl
