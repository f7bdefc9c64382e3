#pragma once

#include <span>
#include <string>
#include <vector>

#include "glova/core.hpp"
#include "glova/rng.hpp"

namespace glova {

enum class ProcessCorner { TT, SS, FF, SF, FS, GLOBAL_MC };

// C: corners only. CMCL: corners + local MC. CMCGL: VT corners + global/local MC.
enum class VerificationMethod { C, CMCL, CMCGL };

std::string to_string(ProcessCorner p);
std::string to_string(VerificationMethod m);
ProcessCorner parse_process(const std::string& s);
VerificationMethod parse_method(const std::string& s);

struct PvtCorner {
    ProcessCorner process = ProcessCorner::TT;
    double voltage = 0.0;      // V
    double temperature = 0.0;  // degC

    std::string label() const;
    bool operator==(const PvtCorner&) const = default;
};

struct CornerGrid {
    std::vector<ProcessCorner> processes;
    std::vector<double> voltages;
    std::vector<double> temperatures;
};

/// Process-major cross product. CMCGL drops the predefined process corners
/// in favour of a single GLOBAL_MC entry.
std::vector<PvtCorner> enumerate_corners(VerificationMethod method, const CornerGrid& grid);

struct Device {
    std::string name;
    std::size_t width_param = 0;
    std::size_t length_param = 0;
};

struct MismatchDim {
    std::string name;
    std::size_t device = 0;
    double pelgrom = 0.0;  // A_d, e.g. mV*um
};

struct VarianceModel {
    std::vector<Device> devices;
    std::vector<MismatchDim> dims;
    std::vector<double> global_sigmas;  // one per mismatch dim

    std::size_t dimension() const noexcept { return dims.size(); }
    void validate(const DesignSpace& space) const;
};

/// sigma_d = A_d / sqrt(W_d * L_d) over physical sizes.
std::vector<double> local_sigma(const DesignVector& x, const DesignSpace& space,
                                const VarianceModel& model);

struct MismatchCondition {
    std::vector<double> h;
    std::vector<double> global;  // shared die-level draw h1
};

std::vector<MismatchCondition> sample_mismatch_set(std::span<const double> local_sigmas,
                                                   std::span<const double> global_sigmas,
                                                   std::size_t n, VerificationMethod mode,
                                                   RngStream& rng);

std::vector<MismatchCondition> sample_mismatch_set(const DesignVector& x, const DesignSpace& space,
                                                   const VarianceModel& model, std::size_t n,
                                                   VerificationMethod mode, RngStream& rng);

/// Binds a variance model and method so callers only supply x and a stream.
class MismatchSampler {
public:
    MismatchSampler(DesignSpace space, VarianceModel model, VerificationMethod mode)
        : space_(std::move(space)), model_(std::move(model)), mode_(mode) {
        model_.validate(space_);
    }

    std::vector<MismatchCondition> sample(const DesignVector& x, std::size_t n,
                                          RngStream& rng) const {
        return sample_mismatch_set(x, space_, model_, n, mode_, rng);
    }
    VerificationMethod mode() const noexcept { return mode_; }
    std::size_t dimension() const noexcept { return model_.dimension(); }
    const VarianceModel& model() const noexcept { return model_; }

private:
    DesignSpace space_;
    VarianceModel model_;
    VerificationMethod mode_;
};

}  // namespace glova
