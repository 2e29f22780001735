#pragma once

#include <cstddef>
#include <vector>

#include "qrc/intensity.hpp"
#include "qrc/rng.hpp"

namespace qrc {

// Common part of n laws: integral of the pointwise minimum of their
// continuous densities plus, for atom locations shared by every law, the
// minimum point mass. Mutually singular laws give 0.
double common_part(const std::vector<DistributionView>& laws);

struct JointDraw {
    std::vector<double> values;
    bool coincided = false;
};

namespace detail {

// Absolute point mass, as opposed to the conditional jump of qrc::Atom.
struct PointMass {
    double at = 0.0;
    double prob = 0.0;
};

// Sampling table for one branch of the split: linear-interpolated density
// on knots with an exact-mass renormalized cumulative, plus point masses.
struct TabulatedDistribution {
    std::vector<double> s;  // knots, increasing
    std::vector<double> f;  // density values at knots
    std::vector<double> C;  // cumulative of the continuous part at knots
    std::vector<PointMass> atoms;
    double total = 0.0;  // continuous mass + atom mass

    // Smallest x with (scaled) cumulative >= u * total, u in (0,1).
    double quantile(double u) const;
    void renormalize_continuous(double exact_mass);
};

}  // namespace detail

// Joint sampler for n >= 2 laws: with probability kappa all coordinates are
// set to one shared draw from the common-part distribution, otherwise each
// coordinate gets an independent draw from its leftover distribution. Every
// marginal is exact and P{all coordinates equal} = kappa.
class MaximalCoupler {
  public:
    static MaximalCoupler build(const std::vector<DistributionView>& laws,
                                std::size_t table_points = 2048);

    double kappa() const { return kappa_; }
    std::size_t n() const { return n_; }

    JointDraw joint_sample(RngStream& rng) const;

  private:
    MaximalCoupler() = default;

    double kappa_ = 0.0;
    std::size_t n_ = 0;
    // kappa == 1 shortcut: all laws identical, sample the law directly.
    bool identical_laws_ = false;
    GeneralizedIntensity shared_law_;
    detail::TabulatedDistribution common_;
    std::vector<detail::TabulatedDistribution> leftover_;
    // kappa == 0 shortcut: independent exact sampling from the inputs.
    std::vector<GeneralizedIntensity> marginal_laws_;
};

inline MaximalCoupler build_coupler(const std::vector<DistributionView>& laws) {
    return MaximalCoupler::build(laws);
}

inline JointDraw joint_sample(const MaximalCoupler& c, RngStream& rng) {
    return c.joint_sample(rng);
}

}  // namespace qrc
