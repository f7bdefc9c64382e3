#include "glova/variation.hpp"

#include <cmath>
#include <sstream>

#include "glova/error.hpp"

namespace glova {

std::string to_string(ProcessCorner p) {
    switch (p) {
        case ProcessCorner::TT: return "TT";
        case ProcessCorner::SS: return "SS";
        case ProcessCorner::FF: return "FF";
        case ProcessCorner::SF: return "SF";
        case ProcessCorner::FS: return "FS";
        case ProcessCorner::GLOBAL_MC: return "GLOBAL_MC";
    }
    return "?";
}

std::string to_string(VerificationMethod m) {
    switch (m) {
        case VerificationMethod::C: return "C";
        case VerificationMethod::CMCL: return "CMCL";
        case VerificationMethod::CMCGL: return "CMCGL";
    }
    return "?";
}

ProcessCorner parse_process(const std::string& s) {
    for (auto p : {ProcessCorner::TT, ProcessCorner::SS, ProcessCorner::FF, ProcessCorner::SF,
                   ProcessCorner::FS, ProcessCorner::GLOBAL_MC})
        if (to_string(p) == s) return p;
    throw ConfigError("unknown process corner '" + s + "'");
}

VerificationMethod parse_method(const std::string& s) {
    if (s == "C") return VerificationMethod::C;
    if (s == "CMCL" || s == "C-MC_L") return VerificationMethod::CMCL;
    if (s == "CMCGL" || s == "C-MC_G-L") return VerificationMethod::CMCGL;
    throw ConfigError("unknown verification method '" + s + "'");
}

std::string PvtCorner::label() const {
    std::ostringstream os;
    os << to_string(process) << '/' << voltage << "V/" << temperature << 'C';
    return os.str();
}

std::vector<PvtCorner> enumerate_corners(VerificationMethod method, const CornerGrid& grid) {
    if (grid.voltages.empty() || grid.temperatures.empty())
        throw ConfigError("corner grid needs at least one voltage and one temperature");
    std::vector<ProcessCorner> processes = grid.processes;
    if (method == VerificationMethod::CMCGL) {
        processes = {ProcessCorner::GLOBAL_MC};
    } else {
        if (processes.empty()) throw ConfigError("corner grid needs at least one process corner");
        for (auto p : processes)
            if (p == ProcessCorner::GLOBAL_MC)
                throw ConfigError("GLOBAL_MC is only valid for the CMCGL method");
    }
    std::vector<PvtCorner> out;
    out.reserve(processes.size() * grid.voltages.size() * grid.temperatures.size());
    for (auto p : processes)
        for (double v : grid.voltages)
            for (double t : grid.temperatures) out.push_back({p, v, t});
    return out;
}

void VarianceModel::validate(const DesignSpace& space) const {
    if (global_sigmas.size() != dims.size())
        throw ConfigError("global sigma vector must have one entry per mismatch dimension");
    for (const auto& d : devices)
        if (d.width_param >= space.dimension() || d.length_param >= space.dimension())
            throw ConfigError("device '" + d.name + "' refers to a missing design parameter");
    for (const auto& m : dims) {
        if (m.device >= devices.size())
            throw ConfigError("mismatch dimension '" + m.name + "' refers to a missing device");
        if (m.pelgrom < 0.0) throw ConfigError("Pelgrom coefficient must be non-negative");
    }
    for (double s : global_sigmas)
        if (s < 0.0) throw ConfigError("global sigma must be non-negative");
}

std::vector<double> local_sigma(const DesignVector& x, const DesignSpace& space,
                                const VarianceModel& model) {
    const auto phys = denormalize(x, space);
    std::vector<double> sigma(model.dims.size());
    for (std::size_t i = 0; i < model.dims.size(); ++i) {
        const auto& dev = model.devices.at(model.dims[i].device);
        const double area = phys.at(dev.width_param) * phys.at(dev.length_param);
        if (!(area > 0.0)) throw ConfigError("device '" + dev.name + "' has nonpositive area");
        sigma[i] = model.dims[i].pelgrom / std::sqrt(area);
    }
    return sigma;
}

std::vector<MismatchCondition> sample_mismatch_set(std::span<const double> local_sigmas,
                                                   std::span<const double> global_sigmas,
                                                   std::size_t n, VerificationMethod mode,
                                                   RngStream& rng) {
    const std::size_t r = local_sigmas.size();
    std::vector<MismatchCondition> out(n);
    if (mode == VerificationMethod::C) {
        for (auto& c : out) c = {std::vector<double>(r, 0.0), std::vector<double>(r, 0.0)};
        return out;
    }
    std::vector<double> h1(r, 0.0);
    if (mode == VerificationMethod::CMCGL) {
        if (global_sigmas.size() != r)
            throw StructuralError("global and local sigma vectors differ in length");
        for (std::size_t d = 0; d < r; ++d) h1[d] = global_sigmas[d] * rng.normal();
    }
    for (auto& c : out) {
        c.global = h1;
        c.h.resize(r);
        for (std::size_t d = 0; d < r; ++d) c.h[d] = h1[d] + local_sigmas[d] * rng.normal();
    }
    return out;
}

std::vector<MismatchCondition> sample_mismatch_set(const DesignVector& x, const DesignSpace& space,
                                                   const VarianceModel& model, std::size_t n,
                                                   VerificationMethod mode, RngStream& rng) {
    if (mode == VerificationMethod::C)
        return sample_mismatch_set(std::vector<double>(model.dimension(), 0.0), model.global_sigmas,
                                   n, mode, rng);
    return sample_mismatch_set(local_sigma(x, space, model), model.global_sigmas, n, mode, rng);
}

}  // namespace glova
