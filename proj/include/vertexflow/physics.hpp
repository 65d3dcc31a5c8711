#pragma once

#include <memory>
#include <string>

namespace vertexflow {

enum class Phase { wetting, nonwetting };

/// Brooks–Corey capillary pressure with a linear extension below the
/// threshold R on the effective saturation. Shared by both constitutive
/// models; derivatives are with respect to the (unscaled) saturation s.
struct BrooksCoreyCapillary {
    double theta = 3.0;
    double entry_pressure = 5.0e3;
    double threshold = 0.05;
    double s_rw = 0.0;
    double s_ro = 0.0;

    double pressure(double s) const;
    double derivative(double s) const;
    double second_derivative(double s) const;
    /// Effective saturation without clamping.
    double effective(double s) const { return (s - s_rw) / (1.0 - s_rw - s_ro); }
};

struct FluidPair {
    double mu_w = 5.0e-4;
    double mu_o = 2.0e-3;
};

/// Saturation-dependent constitutive laws. Inputs outside
/// [s_rw, 1 - s_ro] are clamped before evaluation.
class ConstitutiveModel {
public:
    virtual ~ConstitutiveModel() = default;

    virtual double s_rw() const = 0;
    virtual double s_ro() const = 0;
    virtual double rel_perm_w(double s) const = 0;
    virtual double rel_perm_o(double s) const = 0;
    virtual double capillary_pressure(double s) const = 0;
    virtual double capillary_pressure_derivative(double s) const = 0;
    virtual double capillary_pressure_second_derivative(double s) const = 0;
    /// Derivatives of k_rw, k_ro with respect to s (used by manufactured sources).
    virtual double rel_perm_w_derivative(double s) const = 0;
    virtual double rel_perm_o_derivative(double s) const = 0;
    virtual std::string name() const = 0;
    virtual std::unique_ptr<ConstitutiveModel> clone() const = 0;

    double clamp(double s) const;
    double effective_saturation(double s) const;
};

/// k_rw = sbar^((2+3θ)/θ), k_ro = (1-sbar)^2 (1 - sbar^((2+3θ)/θ)).
class BrooksCoreyModel final : public ConstitutiveModel {
public:
    BrooksCoreyModel(double theta, double entry_pressure, double threshold, double s_rw, double s_ro);

    double s_rw() const override { return cap_.s_rw; }
    double s_ro() const override { return cap_.s_ro; }
    double theta() const { return cap_.theta; }
    double entry_pressure() const { return cap_.entry_pressure; }
    double threshold() const { return cap_.threshold; }

    double rel_perm_w(double s) const override;
    double rel_perm_o(double s) const override;
    double capillary_pressure(double s) const override;
    double capillary_pressure_derivative(double s) const override;
    double capillary_pressure_second_derivative(double s) const override;
    double rel_perm_w_derivative(double s) const override;
    double rel_perm_o_derivative(double s) const override;
    std::string name() const override { return "brooks-corey"; }
    std::unique_ptr<ConstitutiveModel> clone() const override { return std::make_unique<BrooksCoreyModel>(*this); }

private:
    BrooksCoreyCapillary cap_;
};

/// k_rw = s^2, k_ro = (1-s)^2, no residual saturations, Brooks–Corey p_c.
/// This is the model of the manufactured-solution case.
class QuadraticModel final : public ConstitutiveModel {
public:
    QuadraticModel(double theta, double entry_pressure, double threshold);

    double s_rw() const override { return 0.0; }
    double s_ro() const override { return 0.0; }
    double rel_perm_w(double s) const override;
    double rel_perm_o(double s) const override;
    double capillary_pressure(double s) const override;
    double capillary_pressure_derivative(double s) const override;
    double capillary_pressure_second_derivative(double s) const override;
    double rel_perm_w_derivative(double s) const override;
    double rel_perm_o_derivative(double s) const override;
    std::string name() const override { return "quadratic"; }
    std::unique_ptr<ConstitutiveModel> clone() const override { return std::make_unique<QuadraticModel>(*this); }

private:
    BrooksCoreyCapillary cap_;
};

/// Mobilities and fractional flows of a model/fluid pair.
class TwoPhaseProperties {
public:
    TwoPhaseProperties(const ConstitutiveModel& model, FluidPair fluids);

    const ConstitutiveModel& model() const { return *model_; }
    const FluidPair& fluids() const { return fluids_; }

    double mobility(Phase phase, double s) const;
    double fractional_flow(Phase phase, double s) const;
    double eta_w(double s) const { return mobility(Phase::wetting, s); }
    double eta_o(double s) const { return mobility(Phase::nonwetting, s); }
    double f_w(double s) const { return fractional_flow(Phase::wetting, s); }
    double f_o(double s) const { return fractional_flow(Phase::nonwetting, s); }

private:
    const ConstitutiveModel* model_;
    FluidPair fluids_;
};

/// Count of saturation evaluations clamped since the last reset.
long clamped_evaluations();
void reset_clamp_counter();

}  // namespace vertexflow
