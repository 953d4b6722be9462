#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "krbary/measure.hpp"

namespace krbary {

// Generalized KL: sum (a log(a/b) - a + b), 0 log 0 = 0, +inf if a > 0 where b = 0.
double klDivergence(std::span<const double> a, std::span<const double> b);

struct ScalingConfig {
    double epsilon = 0.0;  // 0: 1e-3 * diam^2 of the supports involved
    std::size_t maxIter = 5000;
    double tol = 1e-8;  // sup-norm change of the log-domain potentials
    std::vector<Point> gridSupport;  // barycenter support
};

enum class DivergenceModel { GHK, HK };

struct DivergenceSpec {
    DivergenceModel model = DivergenceModel::GHK;
    double param = 1.0;  // lambda for GHK, cut locus sigma for HK

    // KL weight: lambda for GHK, 1 for HK.
    double marginalWeight() const;
    // d^2 for GHK; -log cos^2(d) below the cut locus and +inf beyond it for HK.
    double cost(double d) const;
    void validate() const;
};

struct ScalingResult {
    // <c, pi> + w KL(pi_1 | mu) + w KL(pi_2 | nu); the entropy term is left out.
    double value = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    double epsilon = 0.0;
    std::vector<double> f, g;  // pi_ij = exp((f_i + g_j - c_ij) / eps)
    std::vector<double> rowMarginal, colMarginal;
};

ScalingResult unbalancedScaling(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const DivergenceSpec& spec,
                                const ScalingConfig& cfg = {});
ScalingResult ghkDistance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda,
                          const ScalingConfig& cfg = {});
ScalingResult hkDistance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double sigma,
                         const ScalingConfig& cfg = {});

struct ScalingBarycenter {
    DiscreteMeasure barycenter;
    bool converged = false;
    std::size_t iterations = 0;
    double epsilon = 0.0;
};

// Fixed-support barycenter with uniform weights on cfg.gridSupport.
ScalingBarycenter scalingBarycenter(const std::vector<DiscreteMeasure>& measures, const DivergenceSpec& spec,
                                    const ScalingConfig& cfg);

}  // namespace krbary
