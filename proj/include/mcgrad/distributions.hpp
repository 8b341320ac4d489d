#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mcgrad/errors.hpp"
#include "mcgrad/numeric.hpp"
#include "mcgrad/param_vector.hpp"
#include "mcgrad/rng.hpp"

namespace mcgrad {

using Point = std::vector<double>;

inline constexpr double kHalfLog2Pi = 0.9189385332046727417803297;

// Capability record for p(x; theta). Instances are immutable after
// construction; every operation is pure and safe to call concurrently.
// Gradient vectors are always ordered like params().
class Distribution {
public:
    virtual ~Distribution() = default;

    virtual std::string family() const = 0;
    virtual const ParamVector& params() const = 0;
    virtual int dim() const = 0;
    int n_params() const { return params().size(); }

    // Same family, new parameter values (used by finite-difference oracles).
    virtual std::unique_ptr<Distribution> with_params(const ParamVector& p) const = 0;

    virtual double log_pdf(std::span<const double> x) const = 0;
    double pdf(std::span<const double> x) const { return std::exp(log_pdf(x)); }

    // Score d log p / d theta; undefined where pdf(x) = 0.
    virtual std::vector<double> dlogpdf_dtheta(std::span<const double> x) const = 0;

    virtual std::vector<double> dpdf_dtheta(std::span<const double> x) const {
        std::vector<double> s = dlogpdf_dtheta(x);
        const double p = pdf(x);
        for (double& v : s) v *= p;
        return s;
    }

    // Spatial density gradient, one entry per sampling dimension.
    virtual std::vector<double> dpdf_dx(std::span<const double> x) const = 0;

    // d log p / d x (used to build analytic divergences without cancellation
    // through the density magnitude).
    virtual std::vector<double> dlogpdf_dx(std::span<const double> x) const = 0;

    // --- 1-D CDF capability -------------------------------------------------
    virtual bool has_cdf() const { return false; }
    virtual double cdf(double) const {
        throw UnsupportedError(family() + ": cdf not available");
    }
    virtual std::vector<double> dcdf_dtheta(double) const {
        throw UnsupportedError(family() + ": dcdf_dtheta not available");
    }

    // --- reparameterization capability --------------------------------------
    virtual bool has_reparam() const { return false; }
    virtual Point reparam_g(std::span<const double>) const {
        throw UnsupportedError(family() + ": reparameterization not available");
    }
    // dim x n_params; column order matches params().
    virtual Mat dg_dtheta(std::span<const double>) const {
        throw UnsupportedError(family() + ": reparameterization not available");
    }
    virtual Point standardize_S(std::span<const double>) const {
        throw UnsupportedError(family() + ": reparameterization not available");
    }
    virtual Point draw_standard(std::uint64_t, std::uint64_t) const {
        throw UnsupportedError(family() + ": reparameterization not available");
    }

    // --- analytic spatial divergence of the reparameterization velocity -----
    // div_x of column i of dg_dtheta(S(x)); constant-in-x for location
    // parameters of location-scale families, 1/scale for scale parameters.
    virtual bool has_reparam_velocity_divergence() const { return false; }
    virtual double reparam_velocity_divergence(std::span<const double>, int) const {
        throw UnsupportedError(family() + ": analytic flow divergence not available");
    }

    // --- standardization-function Jacobians (implicit flows) ----------------
    virtual bool has_standardization_jacobian() const { return false; }
    virtual Mat dS_dx(std::span<const double>) const {
        throw UnsupportedError(family() + ": standardization Jacobian not available");
    }
    virtual Mat dS_dtheta(std::span<const double>) const {
        throw UnsupportedError(family() + ": standardization Jacobian not available");
    }

    // --- bounded support (1-D), for moving-boundary oracle terms ------------
    virtual bool bounded_support() const { return false; }
    virtual std::pair<double, double> support() const {
        return {-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
    }
    // How (lo, hi) move with parameter i.
    virtual std::pair<double, double> dsupport_dtheta(int) const { return {0.0, 0.0}; }

    // Deterministic function of (seed, index): reparam_g applied to standard
    // draws where available.
    virtual Point sample(std::uint64_t seed, std::uint64_t index) const {
        return reparam_g(draw_standard(seed, index));
    }

    // 1-D conveniences.
    double log_pdf1(double x) const { return log_pdf(std::span<const double>(&x, 1)); }
    double pdf1(double x) const { return std::exp(log_pdf1(x)); }
    double sample1(std::uint64_t seed, std::uint64_t index) const {
        return sample(seed, index)[0];
    }
};

// ---------------------------------------------------------------------------

class Gaussian1D : public Distribution {
public:
    Gaussian1D(double mu, double sigma) : mu_(mu), sigma_(sigma) {
        if (!(sigma > 0.0)) throw ConfigError("Gaussian1D: sigma must be > 0");
        params_ = {{"mu", mu}, {"sigma", sigma}};
    }

    std::string family() const override { return "gaussian"; }
    const ParamVector& params() const override { return params_; }
    int dim() const override { return 1; }
    double mu() const { return mu_; }
    double sigma() const { return sigma_; }

    std::unique_ptr<Distribution> with_params(const ParamVector& p) const override {
        return std::make_unique<Gaussian1D>(p.value(p.index_of("mu")),
                                            p.value(p.index_of("sigma")));
    }

    double log_pdf(std::span<const double> x) const override {
        const double z = (x[0] - mu_) / sigma_;
        return -kHalfLog2Pi - std::log(sigma_) - 0.5 * z * z;
    }

    std::vector<double> dlogpdf_dtheta(std::span<const double> x) const override {
        const double z = (x[0] - mu_) / sigma_;
        return {z / sigma_, (z * z - 1.0) / sigma_};
    }

    std::vector<double> dpdf_dx(std::span<const double> x) const override {
        const double z = (x[0] - mu_) / sigma_;
        return {-pdf(x) * z / sigma_};
    }

    std::vector<double> dlogpdf_dx(std::span<const double> x) const override {
        return {-(x[0] - mu_) / (sigma_ * sigma_)};
    }

    bool has_cdf() const override { return true; }
    double cdf(double x) const override {
        const double z = (x - mu_) / sigma_;
        return 0.5 * std::erfc(-z / std::numbers::sqrt2);
    }
    std::vector<double> dcdf_dtheta(double x) const override {
        const double p = pdf1(x);
        const double z = (x - mu_) / sigma_;
        return {-p, -p * z};
    }

    bool has_reparam() const override { return true; }
    Point reparam_g(std::span<const double> eps) const override {
        return {mu_ + sigma_ * eps[0]};
    }
    Mat dg_dtheta(std::span<const double> eps) const override {
        Mat m(1, 2);
        m.at(0, 0) = 1.0;
        m.at(0, 1) = eps[0];
        return m;
    }
    Point standardize_S(std::span<const double> x) const override {
        return {(x[0] - mu_) / sigma_};
    }
    Point draw_standard(std::uint64_t seed, std::uint64_t index) const override {
        return {rng::normal(seed, index, 0)};
    }

    bool has_standardization_jacobian() const override { return true; }
    Mat dS_dx(std::span<const double>) const override {
        Mat m(1, 1);
        m.at(0, 0) = 1.0 / sigma_;
        return m;
    }
    Mat dS_dtheta(std::span<const double> x) const override {
        const double z = (x[0] - mu_) / sigma_;
        Mat m(1, 2);
        m.at(0, 0) = -1.0 / sigma_;
        m.at(0, 1) = -z / sigma_;
        return m;
    }

    bool has_reparam_velocity_divergence() const override { return true; }
    double reparam_velocity_divergence(std::span<const double>, int i) const override {
        return i == 0 ? 0.0 : 1.0 / sigma_;
    }

private:
    double mu_, sigma_;
    ParamVector params_;
};

// ---------------------------------------------------------------------------

// Independent Gaussian components; parameters ordered mu_0..mu_{d-1} then
// sigma_0..sigma_{d-1}.
class DiagonalGaussian final : public Distribution {
public:
    DiagonalGaussian(std::vector<double> mu, std::vector<double> sigma)
        : mu_(std::move(mu)), sigma_(std::move(sigma)) {
        if (mu_.empty() || mu_.size() != sigma_.size())
            throw ConfigError("DiagonalGaussian: mu/sigma length mismatch");
        for (std::size_t i = 0; i < mu_.size(); ++i) {
            if (!(sigma_[i] > 0.0))
                throw ConfigError("DiagonalGaussian: sigma must be > 0");
            params_.push_back("mu_" + std::to_string(i), mu_[i]);
        }
        for (std::size_t i = 0; i < sigma_.size(); ++i)
            params_.push_back("sigma_" + std::to_string(i), sigma_[i]);
    }

    std::string family() const override { return "diag-gaussian"; }
    const ParamVector& params() const override { return params_; }
    int dim() const override { return static_cast<int>(mu_.size()); }

    std::unique_ptr<Distribution> with_params(const ParamVector& p) const override {
        const int d = dim();
        std::vector<double> m(d), s(d);
        for (int i = 0; i < d; ++i) {
            m[i] = p.value(i);
            s[i] = p.value(d + i);
        }
        return std::make_unique<DiagonalGaussian>(std::move(m), std::move(s));
    }

    double log_pdf(std::span<const double> x) const override {
        double lp = 0.0;
        for (int i = 0; i < dim(); ++i) {
            const double z = (x[i] - mu_[i]) / sigma_[i];
            lp += -kHalfLog2Pi - std::log(sigma_[i]) - 0.5 * z * z;
        }
        return lp;
    }

    std::vector<double> dlogpdf_dtheta(std::span<const double> x) const override {
        const int d = dim();
        std::vector<double> s(2 * d);
        for (int i = 0; i < d; ++i) {
            const double z = (x[i] - mu_[i]) / sigma_[i];
            s[i] = z / sigma_[i];
            s[d + i] = (z * z - 1.0) / sigma_[i];
        }
        return s;
    }

    std::vector<double> dpdf_dx(std::span<const double> x) const override {
        const double p = pdf(x);
        std::vector<double> g(dim());
        for (int i = 0; i < dim(); ++i)
            g[i] = -p * (x[i] - mu_[i]) / (sigma_[i] * sigma_[i]);
        return g;
    }

    std::vector<double> dlogpdf_dx(std::span<const double> x) const override {
        std::vector<double> g(dim());
        for (int i = 0; i < dim(); ++i)
            g[i] = -(x[i] - mu_[i]) / (sigma_[i] * sigma_[i]);
        return g;
    }

    bool has_reparam() const override { return true; }
    Point reparam_g(std::span<const double> eps) const override {
        Point x(dim());
        for (int i = 0; i < dim(); ++i) x[i] = mu_[i] + sigma_[i] * eps[i];
        return x;
    }
    Mat dg_dtheta(std::span<const double> eps) const override {
        const int d = dim();
        Mat m(d, 2 * d);
        for (int i = 0; i < d; ++i) {
            m.at(i, i) = 1.0;
            m.at(i, d + i) = eps[i];
        }
        return m;
    }
    Point standardize_S(std::span<const double> x) const override {
        Point eps(dim());
        for (int i = 0; i < dim(); ++i) eps[i] = (x[i] - mu_[i]) / sigma_[i];
        return eps;
    }
    Point draw_standard(std::uint64_t seed, std::uint64_t index) const override {
        Point eps(dim());
        for (int i = 0; i < dim(); ++i)
            eps[i] = rng::normal(seed, index, static_cast<std::uint64_t>(i));
        return eps;
    }

    bool has_standardization_jacobian() const override { return true; }
    Mat dS_dx(std::span<const double>) const override {
        const int d = dim();
        Mat m(d, d);
        for (int i = 0; i < d; ++i) m.at(i, i) = 1.0 / sigma_[i];
        return m;
    }
    Mat dS_dtheta(std::span<const double> x) const override {
        const int d = dim();
        Mat m(d, 2 * d);
        for (int i = 0; i < d; ++i) {
            const double z = (x[i] - mu_[i]) / sigma_[i];
            m.at(i, i) = -1.0 / sigma_[i];
            m.at(i, d + i) = -z / sigma_[i];
        }
        return m;
    }

    bool has_reparam_velocity_divergence() const override { return true; }
    double reparam_velocity_divergence(std::span<const double>, int i) const override {
        return i < dim() ? 0.0 : 1.0 / sigma_[i - dim()];
    }

private:
    std::vector<double> mu_, sigma_;
    ParamVector params_;
};

// ---------------------------------------------------------------------------

// Uniform on [mu - delta, mu + delta]. Density derivatives are undefined at
// the two edge points and raise DomainError there; the true parameter
// gradient of an expectation lives in the boundary motion, not the interior
// density (see estimators::moving_boundary_gradient).
class Uniform1D final : public Distribution {
public:
    Uniform1D(double mu, double delta) : mu_(mu), delta_(delta) {
        if (!(delta > 0.0)) throw ConfigError("Uniform1D: delta must be > 0");
        params_ = {{"mu", mu}, {"delta", delta}};
    }

    std::string family() const override { return "uniform"; }
    const ParamVector& params() const override { return params_; }
    int dim() const override { return 1; }
    double mu() const { return mu_; }
    double delta() const { return delta_; }
    double lo() const { return mu_ - delta_; }
    double hi() const { return mu_ + delta_; }

    std::unique_ptr<Distribution> with_params(const ParamVector& p) const override {
        return std::make_unique<Uniform1D>(p.value(p.index_of("mu")),
                                           p.value(p.index_of("delta")));
    }

    double log_pdf(std::span<const double> x) const override {
        if (x[0] < lo() || x[0] > hi())
            return -std::numeric_limits<double>::infinity();
        return -std::log(2.0 * delta_);
    }

    std::vector<double> dlogpdf_dtheta(std::span<const double> x) const override {
        require_interior(x[0], "dlogpdf_dtheta");
        return {0.0, -1.0 / delta_};
    }

    std::vector<double> dpdf_dtheta(std::span<const double> x) const override {
        require_interior(x[0], "dpdf_dtheta");
        return {0.0, -1.0 / (2.0 * delta_ * delta_)};
    }

    std::vector<double> dpdf_dx(std::span<const double> x) const override {
        if (at_edge(x[0]))
            throw DomainError("Uniform1D: density not differentiable at support edge");
        return {0.0};
    }

    std::vector<double> dlogpdf_dx(std::span<const double> x) const override {
        require_interior(x[0], "dlogpdf_dx");
        return {0.0};
    }

    bool has_cdf() const override { return true; }
    double cdf(double x) const override {
        if (x <= lo()) return 0.0;
        if (x >= hi()) return 1.0;
        return (x - lo()) / (2.0 * delta_);
    }
    std::vector<double> dcdf_dtheta(double x) const override {
        if (at_edge(x))
            throw DomainError("Uniform1D: cdf not differentiable at support edge");
        if (x < lo() || x > hi()) return {0.0, 0.0};
        return {-1.0 / (2.0 * delta_), -(x - mu_) / (2.0 * delta_ * delta_)};
    }

    bool has_reparam() const override { return true; }
    Point reparam_g(std::span<const double> eps) const override {
        return {mu_ + delta_ * eps[0]};
    }
    Mat dg_dtheta(std::span<const double> eps) const override {
        Mat m(1, 2);
        m.at(0, 0) = 1.0;
        m.at(0, 1) = eps[0];
        return m;
    }
    Point standardize_S(std::span<const double> x) const override {
        return {(x[0] - mu_) / delta_};
    }
    // Standard draw is uniform on (-1, 1).
    Point draw_standard(std::uint64_t seed, std::uint64_t index) const override {
        return {2.0 * rng::uniform01(seed, index, 0) - 1.0};
    }

    bool has_standardization_jacobian() const override { return true; }
    Mat dS_dx(std::span<const double>) const override {
        Mat m(1, 1);
        m.at(0, 0) = 1.0 / delta_;
        return m;
    }
    Mat dS_dtheta(std::span<const double> x) const override {
        const double z = (x[0] - mu_) / delta_;
        Mat m(1, 2);
        m.at(0, 0) = -1.0 / delta_;
        m.at(0, 1) = -z / delta_;
        return m;
    }

    bool has_reparam_velocity_divergence() const override { return true; }
    double reparam_velocity_divergence(std::span<const double>, int i) const override {
        return i == 0 ? 0.0 : 1.0 / delta_;
    }

    bool bounded_support() const override { return true; }
    std::pair<double, double> support() const override { return {lo(), hi()}; }
    std::pair<double, double> dsupport_dtheta(int i) const override {
        if (i == 0) return {1.0, 1.0};   // mu shifts both edges
        return {-1.0, 1.0};              // delta widens the slab
    }

private:
    bool at_edge(double x) const { return x == lo() || x == hi(); }
    void require_interior(double x, const char* op) const {
        if (at_edge(x))
            throw DomainError(std::string("Uniform1D: ") + op +
                              " undefined at support edge");
        if (x < lo() || x > hi())
            throw DomainError(std::string("Uniform1D: ") + op +
                              " undefined outside support (pdf = 0)");
    }

    double mu_, delta_;
    ParamVector params_;
};

}  // namespace mcgrad
