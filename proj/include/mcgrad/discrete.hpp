#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "mcgrad/errors.hpp"
#include "mcgrad/param_vector.hpp"
#include "mcgrad/rng.hpp"

namespace mcgrad {

// Discrete distribution on {0..Y}. Any base pmf is renormalized over the
// truncated support, and the parameter derivatives include the
// renormalization term, so sum_y dpmf_dtheta(y, i) = 0 holds by construction.
class TruncatedDiscrete {
public:
    using BasePmf = std::function<double(int, const ParamVector&)>;
    using BaseDPmf = std::function<double(int, const ParamVector&, int)>;

    TruncatedDiscrete(int y_max, ParamVector theta, BasePmf base, BaseDPmf dbase)
        : y_max_(y_max), theta_(std::move(theta)),
          base_(std::move(base)), dbase_(std::move(dbase)) {
        if (y_max_ < 0) throw ConfigError("TruncatedDiscrete: y_max must be >= 0");
        tabulate();
    }

    int ymax() const { return y_max_; }
    const ParamVector& params() const { return theta_; }
    int n_params() const { return theta_.size(); }

    TruncatedDiscrete with_params(const ParamVector& p) const {
        return TruncatedDiscrete(y_max_, p, base_, dbase_);
    }

    double pmf(int y) const {
        check(y);
        return pmf_[y];
    }
    double dpmf_dtheta(int y, int i) const {
        check(y);
        return dpmf_[static_cast<std::size_t>(y) * n_params() + i];
    }

    // Q(y) = sum_{i<=y} pmf(i); Q(Y) = 1 exactly, dQ(Y)/dtheta = 0 exactly
    // (normalization forces both).
    double Q(int y) const {
        check(y);
        return cdf_[y];
    }
    double dQ_dtheta(int y, int i) const {
        check(y);
        return dcdf_[static_cast<std::size_t>(y) * n_params() + i];
    }

    // Inverse-CDF draw; pure function of (seed, index).
    int sample(std::uint64_t seed, std::uint64_t index) const {
        const double u = rng::uniform01(seed, index, 0);
        for (int y = 0; y < y_max_; ++y)
            if (u <= cdf_[y]) return y;
        return y_max_;
    }

private:
    void check(int y) const {
        if (y < 0 || y > y_max_)
            throw DomainError("TruncatedDiscrete: y outside {0..Y}");
    }

    void tabulate() {
        const int P = n_params();
        std::vector<double> w(y_max_ + 1);
        std::vector<double> dw(static_cast<std::size_t>(y_max_ + 1) * P);
        double z = 0.0;
        std::vector<double> dz(P, 0.0);
        for (int y = 0; y <= y_max_; ++y) {
            w[y] = base_(y, theta_);
            if (!(w[y] >= 0.0))
                throw ConfigError("TruncatedDiscrete: negative base pmf");
            z += w[y];
            for (int i = 0; i < P; ++i) {
                dw[static_cast<std::size_t>(y) * P + i] = dbase_(y, theta_, i);
                dz[i] += dw[static_cast<std::size_t>(y) * P + i];
            }
        }
        if (!(z > 0.0)) throw ConfigError("TruncatedDiscrete: zero total mass");

        pmf_.resize(y_max_ + 1);
        dpmf_.resize(dw.size());
        cdf_.resize(y_max_ + 1);
        dcdf_.assign(dw.size(), 0.0);
        double acc = 0.0;
        std::vector<double> dacc(P, 0.0);
        for (int y = 0; y <= y_max_; ++y) {
            pmf_[y] = w[y] / z;
            acc += pmf_[y];
            cdf_[y] = acc;
            for (int i = 0; i < P; ++i) {
                const std::size_t k = static_cast<std::size_t>(y) * P + i;
                dpmf_[k] = dw[k] / z - w[y] * dz[i] / (z * z);
                dacc[i] += dpmf_[k];
                dcdf_[k] = dacc[i];
            }
        }
        cdf_[y_max_] = 1.0;
        for (int i = 0; i < P; ++i)
            dcdf_[static_cast<std::size_t>(y_max_) * P + i] = 0.0;
    }

    int y_max_;
    ParamVector theta_;
    BasePmf base_;
    BaseDPmf dbase_;
    std::vector<double> pmf_, dpmf_, cdf_, dcdf_;
};

// Poisson(rate) truncated at Y and renormalized; theta = (rate).
inline TruncatedDiscrete truncated_poisson(double rate, int y_max) {
    ParamVector theta{{"rate", rate}};
    auto base = [](int y, const ParamVector& t) {
        const double r = t.value(0);
        return std::exp(y * std::log(r) - r - std::lgamma(y + 1.0));
    };
    auto dbase = [base](int y, const ParamVector& t, int) {
        const double r = t.value(0);
        return base(y, t) * (y / r - 1.0);
    };
    return TruncatedDiscrete(y_max, std::move(theta), base, dbase);
}

// Two-point distribution with p(0) = theta, p(1) = 1 - theta.
inline TruncatedDiscrete two_point(double p0) {
    ParamVector theta{{"p0", p0}};
    auto base = [](int y, const ParamVector& t) {
        return y == 0 ? t.value(0) : 1.0 - t.value(0);
    };
    auto dbase = [](int y, const ParamVector&, int) {
        return y == 0 ? 1.0 : -1.0;
    };
    return TruncatedDiscrete(1, std::move(theta), base, dbase);
}

}  // namespace mcgrad
