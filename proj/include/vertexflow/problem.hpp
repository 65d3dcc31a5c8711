#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "vertexflow/assembly.hpp"
#include "vertexflow/mesh.hpp"
#include "vertexflow/physics.hpp"

namespace vertexflow {

using SpaceTimeField = std::function<double(const Point&, double)>;

/// Prescribed saturation and pressure on a set of boundary nodes.
struct DirichletData {
    std::vector<int> nodes;
    SpaceTimeField saturation;
    SpaceTimeField pressure;
};

/// Volumetric source densities replacing the well terms
/// (wetting equation, non-wetting equation).
using SourceField = std::function<std::pair<double, double>(const Point&, double)>;

/// Discretized flow problem: mesh, rock and fluid data, forcing and
/// boundary treatment. Owns every object the scheme context points to, so it
/// is movable but not copyable.
class FlowProblem {
public:
    FlowProblem(Mesh mesh, std::vector<double> perm_per_element, std::unique_ptr<ConstitutiveModel> model,
                FluidPair fluids, double porosity);

    FlowProblem(const FlowProblem&) = delete;
    FlowProblem& operator=(const FlowProblem&) = delete;
    FlowProblem(FlowProblem&&) = default;
    FlowProblem& operator=(FlowProblem&&) = default;

    const Mesh& mesh() const { return *mesh_; }
    const std::vector<double>& permeability() const { return perm_; }
    const LumpedMass& masses() const { return masses_; }
    const StiffnessCoeffs& coeffs() const { return coeffs_; }
    const ConstitutiveModel& model() const { return *model_; }
    const TwoPhaseProperties& props() const { return *props_; }
    double porosity() const { return porosity_; }

    void set_wells(std::vector<WellBox> wells, double s_in);
    const std::optional<WellField>& wells() const { return wells_; }
    const std::vector<WellBox>& well_boxes() const { return well_boxes_; }

    void set_sources(SourceField f) { sources_ = std::move(f); }
    const SourceField& sources() const { return sources_; }

    void set_dirichlet(DirichletData d) { dirichlet_ = std::move(d); }
    const std::optional<DirichletData>& dirichlet() const { return dirichlet_; }

    void set_initial(SpaceTimeField s0, SpaceTimeField p0);
    const SpaceTimeField& initial_saturation() const { return s0_; }
    const SpaceTimeField& initial_pressure() const { return p0_; }

    /// Nodal right-hand-side densities for the step ending at time t.
    NodalSources step_sources(std::span<const double> s_prev, double t) const;

    SchemeContext context(double tau) const;

    /// Nodes in the support of any well.
    std::vector<char> well_nodes() const;

private:
    std::unique_ptr<Mesh> mesh_;
    std::vector<double> perm_;
    LumpedMass masses_;
    StiffnessCoeffs coeffs_;
    std::unique_ptr<ConstitutiveModel> model_;
    std::unique_ptr<TwoPhaseProperties> props_;
    double porosity_;
    std::optional<WellField> wells_;
    std::vector<WellBox> well_boxes_;
    SourceField sources_;
    std::optional<DirichletData> dirichlet_;
    SpaceTimeField s0_, p0_;
};

}  // namespace vertexflow
