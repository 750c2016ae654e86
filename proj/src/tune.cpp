#include "prepbench/tune.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "prepbench/errors.hpp"
#include "prepbench/rng.hpp"

namespace prepbench::tune {

namespace {

constexpr int kDims = 4;

double halton(std::uint64_t index, std::uint64_t base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

// Low-discrepancy point in [0,1)^4 with a seed-derived Cranley-Patterson
// rotation so different seeds explore different lattices.
std::array<double, kDims> quasi_point(std::uint64_t index,
                                      const std::array<double, kDims>& rot) {
    static constexpr std::array<std::uint64_t, kDims> bases{2, 3, 5, 7};
    std::array<double, kDims> u{};
    for (int d = 0; d < kDims; ++d) {
        double v = halton(index, bases[static_cast<std::size_t>(d)]) +
                   rot[static_cast<std::size_t>(d)];
        u[static_cast<std::size_t>(d)] = v - std::floor(v);
    }
    return u;
}

gbtree::BoostConfig config_from_unit(const SearchSpace& s,
                                     const std::array<double, kDims>& u) {
    gbtree::BoostConfig c;
    c.gamma = s.gamma_lo + u[0] * (s.gamma_hi - s.gamma_lo);
    c.learning_rate =
        std::exp(std::log(s.lr_lo) + u[1] * (std::log(s.lr_hi) - std::log(s.lr_lo)));
    c.max_depth = std::min(
        s.depth_hi,
        s.depth_lo + static_cast<int>(std::floor(u[2] * (s.depth_hi - s.depth_lo + 1))));
    c.n_estimators = std::min(
        s.n_estimators_hi,
        s.n_estimators_lo +
            static_cast<int>(std::floor(
                u[3] * (s.n_estimators_hi - s.n_estimators_lo + 1))));
    return c;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double norm_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

// Dense Cholesky solve for the GP weights; trial counts stay small so this
// is cheap and fully deterministic.
class Surrogate {
public:
    Surrogate(const std::vector<std::array<double, kDims>>& xs,
              const std::vector<double>& ys) {
        n_ = xs.size();
        xs_ = xs;
        double m = 0.0;
        for (double y : ys) m += y;
        m /= static_cast<double>(n_);
        double v = 0.0;
        for (double y : ys) v += (y - m) * (y - m);
        v /= static_cast<double>(n_);
        mean_ = m;
        scale_ = v > 1e-18 ? std::sqrt(v) : 1.0;
        std::vector<double> yn(n_);
        for (std::size_t i = 0; i < n_; ++i) yn[i] = (ys[i] - mean_) / scale_;

        std::vector<double> k(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                k[i * n_ + j] = kernel(xs_[i], xs_[j]) + (i == j ? 1e-6 : 0.0);
        // Cholesky in place.
        chol_ = std::move(k);
        for (std::size_t c = 0; c < n_; ++c) {
            double diag = chol_[c * n_ + c];
            for (std::size_t s = 0; s < c; ++s) diag -= chol_[c * n_ + s] * chol_[c * n_ + s];
            diag = std::sqrt(std::max(diag, 1e-12));
            chol_[c * n_ + c] = diag;
            for (std::size_t r = c + 1; r < n_; ++r) {
                double sum = chol_[r * n_ + c];
                for (std::size_t s = 0; s < c; ++s)
                    sum -= chol_[r * n_ + s] * chol_[c * n_ + s];
                chol_[r * n_ + c] = sum / diag;
            }
        }
        alpha_ = solve(yn);
    }

    // Posterior mean/std in the normalized score space.
    void predict(const std::array<double, kDims>& x, double& mu, double& sigma) const {
        std::vector<double> kx(n_);
        for (std::size_t i = 0; i < n_; ++i) kx[i] = kernel(x, xs_[i]);
        mu = 0.0;
        for (std::size_t i = 0; i < n_; ++i) mu += kx[i] * alpha_[i];
        // v = L^-1 kx
        std::vector<double> v(kx);
        for (std::size_t r = 0; r < n_; ++r) {
            double s = v[r];
            for (std::size_t c = 0; c < r; ++c) s -= chol_[r * n_ + c] * v[c];
            v[r] = s / chol_[r * n_ + r];
        }
        double var = kernel(x, x) + 1e-6;
        for (std::size_t i = 0; i < n_; ++i) var -= v[i] * v[i];
        sigma = std::sqrt(std::max(var, 1e-12));
    }

    double best_normalized(const std::vector<double>& ys) const {
        double b = -1e300;
        for (double y : ys) b = std::max(b, (y - mean_) / scale_);
        return b;
    }

private:
    static double kernel(const std::array<double, kDims>& a,
                         const std::array<double, kDims>& b) {
        constexpr double ell = 0.3;
        double s = 0.0;
        for (int d = 0; d < kDims; ++d) {
            const double diff = a[static_cast<std::size_t>(d)] -
                                b[static_cast<std::size_t>(d)];
            s += diff * diff;
        }
        return std::exp(-0.5 * s / (ell * ell));
    }

    std::vector<double> solve(const std::vector<double>& y) const {
        std::vector<double> v(y);
        for (std::size_t r = 0; r < n_; ++r) {
            double s = v[r];
            for (std::size_t c = 0; c < r; ++c) s -= chol_[r * n_ + c] * v[c];
            v[r] = s / chol_[r * n_ + r];
        }
        for (std::size_t ri = n_; ri > 0; --ri) {
            const std::size_t r = ri - 1;
            double s = v[r];
            for (std::size_t c = r + 1; c < n_; ++c) s -= chol_[c * n_ + r] * v[c];
            v[r] = s / chol_[r * n_ + r];
        }
        return v;
    }

    std::size_t n_ = 0;
    double mean_ = 0.0, scale_ = 1.0;
    std::vector<std::array<double, kDims>> xs_;
    std::vector<double> chol_;
    std::vector<double> alpha_;
};

}  // namespace

TuneResult optimize(const SearchSpace& space,
                    const std::function<double(const gbtree::BoostConfig&)>& objective,
                    int budget, std::uint64_t seed) {
    if (budget < 1) throw ArgumentError("tune: budget must be >= 1");

    Rng rng(derive_seed(seed, "tune"));
    std::array<double, kDims> rot{};
    for (int d = 0; d < kDims; ++d) rot[static_cast<std::size_t>(d)] = rng.uniform();

    TuneResult res;
    std::vector<std::array<double, kDims>> good_x;
    std::vector<double> good_y;
    std::uint64_t halton_index = 1;

    auto evaluate = [&](const std::array<double, kDims>& u) {
        Trial t;
        t.config = config_from_unit(space, u);
        try {
            t.score = objective(t.config);
            good_x.push_back(u);
            good_y.push_back(t.score);
        } catch (const std::exception&) {
            t.failed = true;
        }
        res.trials.push_back(t);
    };

    const int warmup = std::min(budget, std::max(5, budget / 4));
    for (int i = 0; i < warmup; ++i) evaluate(quasi_point(halton_index++, rot));

    constexpr int kCandidates = 256;
    constexpr double kXi = 0.01;
    while (static_cast<int>(res.trials.size()) < budget) {
        if (good_y.size() < 2) {
            // Not enough signal for a surrogate yet; keep space-filling.
            evaluate(quasi_point(halton_index++, rot));
            continue;
        }
        const Surrogate gp(good_x, good_y);
        const double best = gp.best_normalized(good_y);
        std::array<double, kDims> best_u{};
        double best_ei = -1.0;
        for (int c = 0; c < kCandidates; ++c) {
            const auto u = quasi_point(halton_index++, rot);
            double mu, sigma;
            gp.predict(u, mu, sigma);
            const double z = (mu - best - kXi) / sigma;
            const double ei = (mu - best - kXi) * norm_cdf(z) + sigma * norm_pdf(z);
            if (ei > best_ei) {
                best_ei = ei;
                best_u = u;
            }
        }
        evaluate(best_u);
    }

    res.budget_used = static_cast<int>(res.trials.size());
    int best_idx = -1;
    for (std::size_t i = 0; i < res.trials.size(); ++i) {
        if (res.trials[i].failed) continue;
        if (best_idx < 0 ||
            res.trials[i].score > res.trials[static_cast<std::size_t>(best_idx)].score)
            best_idx = static_cast<int>(i);
    }
    if (best_idx < 0) throw TuneError("tune: every trial failed");
    res.best_config = res.trials[static_cast<std::size_t>(best_idx)].config;
    return res;
}

}  // namespace prepbench::tune
