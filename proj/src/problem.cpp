#include "vertexflow/problem.hpp"

#include <fmt/format.h>

#include "vertexflow/error.hpp"

namespace vertexflow {

FlowProblem::FlowProblem(Mesh mesh, std::vector<double> perm, std::unique_ptr<ConstitutiveModel> model,
                         FluidPair fluids, double porosity)
    : mesh_(std::make_unique<Mesh>(std::move(mesh))),
      perm_(std::move(perm)),
      model_(std::move(model)),
      porosity_(porosity) {
    if (!model_) throw InvalidConfig("flow problem needs a constitutive model");
    if (!(porosity_ > 0.0 && porosity_ <= 1.0 + 1e-12) && !(porosity_ > 0.0))
        throw InvalidConfig(fmt::format("porosity must be positive, got {}", porosity_));
    masses_ = lumped_masses(*mesh_);
    coeffs_ = stiffness_coeffs(*mesh_, perm_);
    props_ = std::make_unique<TwoPhaseProperties>(*model_, fluids);
    s0_ = [lo = model_->s_rw()](const Point&, double) { return lo; };
    p0_ = [](const Point&, double) { return 0.0; };
}

void FlowProblem::set_wells(std::vector<WellBox> wells, double s_in) {
    well_boxes_ = std::move(wells);
    if (well_boxes_.empty()) {
        wells_.reset();
        return;
    }
    wells_ = build_well_field(*mesh_, masses_, well_boxes_, s_in);
}

void FlowProblem::set_initial(SpaceTimeField s0, SpaceTimeField p0) {
    s0_ = std::move(s0);
    p0_ = std::move(p0);
}

NodalSources FlowProblem::step_sources(std::span<const double> s_prev, double t) const {
    const std::size_t n = mesh_->num_vertices();
    if (sources_) {
        NodalSources src{std::vector<double>(n), std::vector<double>(n)};
        for (std::size_t i = 0; i < n; ++i) {
            const auto [w, o] = sources_(mesh_->vertex(i), t);
            src.wetting[i] = w;
            src.nonwetting[i] = o;
        }
        return src;
    }
    if (wells_) return well_sources(*wells_, *props_, s_prev);
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

SchemeContext FlowProblem::context(double tau) const {
    return SchemeContext{mesh_.get(), &masses_, &coeffs_, props_.get(), tau, porosity_};
}

std::vector<char> FlowProblem::well_nodes() const {
    std::vector<char> flag(mesh_->num_vertices(), 0);
    if (wells_)
        for (std::size_t i = 0; i < flag.size(); ++i) flag[i] = (wells_->qbar[i] > 0.0 || wells_->qund[i] > 0.0) ? 1 : 0;
    return flag;
}

}  // namespace vertexflow
