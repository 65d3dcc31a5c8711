#include "vertexflow/physics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <fmt/format.h>

#include "vertexflow/error.hpp"
#include "vertexflow/log.hpp"

namespace vertexflow {

namespace {

std::atomic<long> g_clamped{0};

void validate_capillary(const BrooksCoreyCapillary& c) {
    if (!(c.theta > 0.0)) throw InvalidConfig(fmt::format("theta must be > 0, got {}", c.theta));
    if (!(c.entry_pressure > 0.0)) throw InvalidConfig(fmt::format("entry pressure must be > 0, got {}", c.entry_pressure));
    if (!(c.threshold > 0.0 && c.threshold < 1.0))
        throw InvalidConfig(fmt::format("regularization threshold must lie in (0,1), got {}", c.threshold));
    if (c.s_rw < 0.0 || c.s_ro < 0.0 || c.s_rw + c.s_ro >= 1.0)
        throw InvalidConfig(fmt::format("residual saturations must satisfy 0 <= s_rw, s_ro and s_rw + s_ro < 1 (got {}, {})",
                                        c.s_rw, c.s_ro));
}

}  // namespace

long clamped_evaluations() { return g_clamped.load(std::memory_order_relaxed); }
void reset_clamp_counter() { g_clamped.store(0, std::memory_order_relaxed); }

double BrooksCoreyCapillary::pressure(double s) const {
    const double sb = effective(s);
    if (sb > threshold) return entry_pressure * std::pow(sb, -1.0 / theta);
    return entry_pressure * std::pow(threshold, -1.0 / theta) -
           entry_pressure / theta * std::pow(threshold, -1.0 - 1.0 / theta) * (sb - threshold);
}

double BrooksCoreyCapillary::derivative(double s) const {
    const double sb = effective(s);
    const double dsb = 1.0 / (1.0 - s_rw - s_ro);
    const double base = sb > threshold ? sb : threshold;
    return -entry_pressure / theta * std::pow(base, -1.0 - 1.0 / theta) * dsb;
}

double BrooksCoreyCapillary::second_derivative(double s) const {
    const double sb = effective(s);
    if (sb <= threshold) return 0.0;
    const double dsb = 1.0 / (1.0 - s_rw - s_ro);
    return entry_pressure / theta * (1.0 + 1.0 / theta) * std::pow(sb, -2.0 - 1.0 / theta) * dsb * dsb;
}

double ConstitutiveModel::clamp(double s) const {
    const double lo = s_rw(), hi = 1.0 - s_ro();
    if (s >= lo && s <= hi) return s;
    if (std::isnan(s)) throw NumericState("NaN saturation passed to constitutive model");
    if (g_clamped.fetch_add(1, std::memory_order_relaxed) == 0)
        log::warn(fmt::format("saturation {:.17g} outside [{}, {}] clamped before constitutive evaluation", s, lo, hi));
    return std::clamp(s, lo, hi);
}

double ConstitutiveModel::effective_saturation(double s) const {
    return (clamp(s) - s_rw()) / (1.0 - s_rw() - s_ro());
}

BrooksCoreyModel::BrooksCoreyModel(double theta, double entry_pressure, double threshold, double s_rw, double s_ro)
    : cap_{theta, entry_pressure, threshold, s_rw, s_ro} {
    validate_capillary(cap_);
}

double BrooksCoreyModel::rel_perm_w(double s) const {
    const double sb = effective_saturation(s);
    return std::pow(sb, (2.0 + 3.0 * cap_.theta) / cap_.theta);
}

double BrooksCoreyModel::rel_perm_o(double s) const {
    const double sb = effective_saturation(s);
    const double krw = std::pow(sb, (2.0 + 3.0 * cap_.theta) / cap_.theta);
    return (1.0 - sb) * (1.0 - sb) * (1.0 - krw);
}

double BrooksCoreyModel::rel_perm_w_derivative(double s) const {
    const double sb = effective_saturation(s);
    const double e = (2.0 + 3.0 * cap_.theta) / cap_.theta;
    return e * std::pow(sb, e - 1.0) / (1.0 - cap_.s_rw - cap_.s_ro);
}

double BrooksCoreyModel::rel_perm_o_derivative(double s) const {
    const double sb = effective_saturation(s);
    const double e = (2.0 + 3.0 * cap_.theta) / cap_.theta;
    const double krw = std::pow(sb, e);
    const double dkrw = e * std::pow(sb, e - 1.0);
    const double d = -2.0 * (1.0 - sb) * (1.0 - krw) - (1.0 - sb) * (1.0 - sb) * dkrw;
    return d / (1.0 - cap_.s_rw - cap_.s_ro);
}

double BrooksCoreyModel::capillary_pressure(double s) const { return cap_.pressure(clamp(s)); }
double BrooksCoreyModel::capillary_pressure_derivative(double s) const { return cap_.derivative(clamp(s)); }
double BrooksCoreyModel::capillary_pressure_second_derivative(double s) const {
    return cap_.second_derivative(clamp(s));
}

QuadraticModel::QuadraticModel(double theta, double entry_pressure, double threshold)
    : cap_{theta, entry_pressure, threshold, 0.0, 0.0} {
    validate_capillary(cap_);
}

double QuadraticModel::rel_perm_w(double s) const {
    const double c = clamp(s);
    return c * c;
}
double QuadraticModel::rel_perm_o(double s) const {
    const double c = 1.0 - clamp(s);
    return c * c;
}
double QuadraticModel::rel_perm_w_derivative(double s) const { return 2.0 * clamp(s); }
double QuadraticModel::rel_perm_o_derivative(double s) const { return -2.0 * (1.0 - clamp(s)); }
double QuadraticModel::capillary_pressure(double s) const { return cap_.pressure(clamp(s)); }
double QuadraticModel::capillary_pressure_derivative(double s) const { return cap_.derivative(clamp(s)); }
double QuadraticModel::capillary_pressure_second_derivative(double s) const {
    return cap_.second_derivative(clamp(s));
}

TwoPhaseProperties::TwoPhaseProperties(const ConstitutiveModel& model, FluidPair fluids)
    : model_(&model), fluids_(fluids) {
    if (!(fluids_.mu_w > 0.0) || !(fluids_.mu_o > 0.0))
        throw InvalidConfig(fmt::format("viscosities must be positive (mu_w={}, mu_o={})", fluids_.mu_w, fluids_.mu_o));
}

double TwoPhaseProperties::mobility(Phase phase, double s) const {
    return phase == Phase::wetting ? model_->rel_perm_w(s) / fluids_.mu_w : model_->rel_perm_o(s) / fluids_.mu_o;
}

double TwoPhaseProperties::fractional_flow(Phase phase, double s) const {
    const double ew = eta_w(s), eo = eta_o(s);
    const double total = ew + eo;
    if (!(total > 0.0)) throw DegenerateState(fmt::format("both mobilities vanish at s={}", s));
    const double fw = ew / total;
    return phase == Phase::wetting ? fw : 1.0 - fw;
}

}  // namespace vertexflow
