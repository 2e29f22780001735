#include "qrc/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qrc/errors.hpp"
#include "qrc/quadrature.hpp"

namespace qrc {

namespace {

constexpr double kAtomLocTol = 1e-12;

// P{xi = a} for an atom of gi at location a: survival just before a times
// the conditional jump mass.
double atom_point_mass(const GeneralizedIntensity& gi, const Atom& atom) {
    double e = gi.cumulative_hazard(atom.at);
    for (const auto& other : gi.atoms()) {
        if (other.at >= atom.at - kAtomLocTol) break;
        e += other.weight();
    }
    if (e == kInf) return 0.0;
    return std::exp(-e) * atom.mass;
}

const Atom* find_atom_at(const GeneralizedIntensity& gi, double at) {
    for (const auto& a : gi.atoms())
        if (std::fabs(a.at - at) <= kAtomLocTol) return &a;
    return nullptr;
}

// Atom locations present in every law, with the minimum point mass.
std::vector<detail::PointMass> shared_atoms(const std::vector<DistributionView>& laws) {
    std::vector<detail::PointMass> out;
    for (const auto& a0 : laws[0].intensity().atoms()) {
        double min_pm = atom_point_mass(laws[0].intensity(), a0);
        bool everywhere = true;
        for (std::size_t i = 1; i < laws.size() && everywhere; ++i) {
            const Atom* ai = find_atom_at(laws[i].intensity(), a0.at);
            if (!ai)
                everywhere = false;
            else
                min_pm = std::min(min_pm, atom_point_mass(laws[i].intensity(), *ai));
        }
        if (everywhere && min_pm > 0.0) out.push_back({a0.at, min_pm});
    }
    return out;
}

std::vector<double> union_breakpoints(const std::vector<DistributionView>& laws,
                                      double limit) {
    std::vector<double> bp;
    for (const auto& l : laws)
        for (double x : l.breakpoints())
            if (x > 0.0 && x < limit) bp.push_back(x);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    return bp;
}

double min_density(const std::vector<DistributionView>& laws, double s) {
    double v = kInf;
    for (const auto& l : laws) v = std::min(v, l.density(s));
    return v;
}

double continuous_common_mass(const std::vector<DistributionView>& laws,
                              double limit, const std::vector<double>& bp) {
    auto f = [&](double s) { return min_density(laws, s); };
    return integrate(f, 0.0, limit, bp).value;
}

}  // namespace

double common_part(const std::vector<DistributionView>& laws) {
    if (laws.size() < 2) throw model_error("common_part needs at least 2 laws");
    double limit = kInf;
    for (const auto& l : laws) limit = std::min(limit, l.truncation_point());
    const std::vector<double> bp = union_breakpoints(laws, limit);
    double kappa = continuous_common_mass(laws, limit, bp);
    for (const auto& pm : shared_atoms(laws)) kappa += pm.prob;
    return std::clamp(kappa, 0.0, 1.0);
}

// --- TabulatedDistribution --------------------------------------------------

namespace detail {

void TabulatedDistribution::renormalize_continuous(double exact_mass) {
    const double tab = C.empty() ? 0.0 : C.back();
    if (tab <= 0.0 || exact_mass <= 0.0) return;
    const double scale = exact_mass / tab;
    for (auto& c : C) c *= scale;
    for (auto& v : f) v *= scale;
}

double TabulatedDistribution::quantile(double u) const {
    double target = u * total;
    const double cont_total = C.empty() ? 0.0 : C.back();

    auto invert_continuous = [&](double t) {
        if (t <= 0.0) return s.front();
        if (t >= cont_total) return s.back();
        const auto it = std::upper_bound(C.begin(), C.end(), t);
        std::size_t j = static_cast<std::size_t>(it - C.begin());
        if (j == 0) return s.front();
        --j;
        if (j + 1 >= s.size()) return s.back();
        const double h = s[j + 1] - s[j];
        const double dc = t - C[j];
        const double f0 = f[j], f1 = f[j + 1];
        const double slope = (f1 - f0) / h;
        double d;
        if (std::fabs(slope) * h < 1e-12 * std::max(1.0, f0)) {
            d = f0 > 0.0 ? dc / f0 : 0.5 * h;
        } else {
            // solve f0*d + slope*d^2/2 = dc
            const double disc = f0 * f0 + 2.0 * slope * dc;
            d = disc > 0.0 ? (-f0 + std::sqrt(disc)) / slope : dc / std::max(f0, 1e-300);
        }
        return s[j] + std::clamp(d, 0.0, h);
    };

    double wsum = 0.0;
    for (const auto& a : atoms) {
        // continuous cumulative at the atom location
        const auto it = std::upper_bound(s.begin(), s.end(), a.at);
        double cc;
        if (it == s.begin()) {
            cc = 0.0;
        } else if (it == s.end()) {
            cc = cont_total;
        } else {
            const std::size_t j = static_cast<std::size_t>(it - s.begin()) - 1;
            const double h = s[j + 1] - s[j];
            const double d = a.at - s[j];
            cc = C[j] + f[j] * d + 0.5 * (f[j + 1] - f[j]) / h * d * d;
        }
        if (target <= cc + wsum) return invert_continuous(target - wsum);
        if (target <= cc + wsum + a.prob) return a.at;
        wsum += a.prob;
    }
    return invert_continuous(target - wsum);
}

}  // namespace detail

// --- MaximalCoupler ---------------------------------------------------------

namespace {

detail::TabulatedDistribution make_table(
    const std::vector<double>& knots,
    const std::function<double(double)>& density,
    std::vector<detail::PointMass> atoms, double exact_continuous_mass) {
    detail::TabulatedDistribution t;
    t.s = knots;
    t.f.resize(knots.size());
    t.C.resize(knots.size());
    for (std::size_t j = 0; j < knots.size(); ++j)
        t.f[j] = std::max(0.0, density(knots[j]));
    t.C[0] = 0.0;
    for (std::size_t j = 1; j < knots.size(); ++j)
        t.C[j] = t.C[j - 1] +
                 0.5 * (t.f[j] + t.f[j - 1]) * (knots[j] - knots[j - 1]);
    t.renormalize_continuous(exact_continuous_mass);
    t.atoms = std::move(atoms);
    std::sort(t.atoms.begin(), t.atoms.end(),
              [](const auto& a, const auto& b) { return a.at < b.at; });
    t.total = exact_continuous_mass;
    for (const auto& a : t.atoms) t.total += a.prob;
    return t;
}

std::vector<double> table_knots(const std::vector<double>& bp, double limit,
                                std::size_t points) {
    std::vector<double> k;
    k.reserve(points + bp.size() + 2);
    for (std::size_t j = 0; j <= points; ++j)
        k.push_back(limit * static_cast<double>(j) / static_cast<double>(points));
    for (double x : bp)
        if (x > 0.0 && x < limit) k.push_back(x);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
}

}  // namespace

MaximalCoupler MaximalCoupler::build(const std::vector<DistributionView>& laws,
                                     std::size_t table_points) {
    if (laws.size() < 2) throw model_error("coupler needs at least 2 laws");
    MaximalCoupler c;
    c.n_ = laws.size();

    bool identical = true;
    for (std::size_t i = 1; i < laws.size(); ++i)
        if (!(laws[i].intensity() == laws[0].intensity())) identical = false;
    if (identical) {
        c.kappa_ = 1.0;
        c.identical_laws_ = true;
        c.shared_law_ = laws[0].intensity();
        return c;
    }

    double limit_common = kInf;
    for (const auto& l : laws) limit_common = std::min(limit_common, l.truncation_point());
    const std::vector<double> bp = union_breakpoints(laws, limit_common);
    const double kappa_cont = continuous_common_mass(laws, limit_common, bp);
    const std::vector<detail::PointMass> shared = shared_atoms(laws);
    double kappa = kappa_cont;
    for (const auto& pm : shared) kappa += pm.prob;
    kappa = std::clamp(kappa, 0.0, 1.0);
    c.kappa_ = kappa;

    if (kappa <= 1e-12) {
        // mutually singular: coupling degenerates to independent sampling
        for (const auto& l : laws) c.marginal_laws_.push_back(l.intensity());
        return c;
    }

    auto fmin = [&laws](double s) { return min_density(laws, s); };
    c.common_ = make_table(table_knots(bp, limit_common, table_points), fmin,
                           shared, kappa_cont);

    if (kappa >= 1.0 - 1e-9) return c;  // leftover branch has no mass

    for (std::size_t i = 0; i < laws.size(); ++i) {
        const auto& law = laws[i];
        const double limit_i = law.truncation_point();
        const std::vector<double> bp_i = union_breakpoints(laws, limit_i);
        auto leftover_density = [&law, &laws](double s) {
            return law.density(s) - min_density(laws, s);
        };
        std::vector<detail::PointMass> atoms_i;
        double atom_mass_i = 0.0;
        for (const auto& a : law.intensity().atoms()) {
            double pm = atom_point_mass(law.intensity(), a);
            atom_mass_i += pm;
            for (const auto& sh : shared)
                if (std::fabs(sh.at - a.at) <= kAtomLocTol) pm -= sh.prob;
            if (pm > 1e-15) atoms_i.push_back({a.at, pm});
        }
        const double total_i = 1.0 - law.survival(limit_i);
        const double cont_mass = (total_i - atom_mass_i) - kappa_cont;
        const double leftover_mass = total_i - kappa;
        const double normalized = leftover_mass / (1.0 - kappa);
        if (std::fabs(normalized - 1.0) > 1e-6) {
            std::ostringstream os;
            os << "coupler leftover for law " << i
               << " is non-normalizable: mass " << leftover_mass << " vs 1-kappa "
               << (1.0 - kappa) << " (law total " << total_i << ")";
            throw numeric_error(os.str());
        }
        c.leftover_.push_back(make_table(table_knots(bp_i, limit_i, table_points),
                                         leftover_density, std::move(atoms_i),
                                         std::max(cont_mass, 0.0)));
    }
    return c;
}

JointDraw MaximalCoupler::joint_sample(RngStream& rng) const {
    JointDraw d;
    d.values.resize(n_);
    if (identical_laws_) {
        const double v = shared_law_.quantile(rng.uniform());
        std::fill(d.values.begin(), d.values.end(), v);
        d.coincided = true;
        return d;
    }
    if (kappa_ <= 1e-12) {
        for (std::size_t i = 0; i < n_; ++i)
            d.values[i] = marginal_laws_[i].quantile(rng.uniform());
        d.coincided = false;
        return d;
    }
    const double usel = rng.uniform();
    if (usel <= kappa_ || leftover_.empty()) {
        // one shared uniform through the common quantile makes the
        // coordinates pointwise equal, not just equal in law
        const double v = common_.quantile(rng.uniform());
        std::fill(d.values.begin(), d.values.end(), v);
        d.coincided = true;
        return d;
    }
    for (std::size_t i = 0; i < n_; ++i)
        d.values[i] = leftover_[i].quantile(rng.uniform());
    d.coincided = false;
    return d;
}

}  // namespace qrc
