#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace spintwa {

/// Error raised for invalid models or configuration files.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

enum class Boundary { Open, Periodic };

/// Phase-space distribution selector: k = +1 (P), 0 (Wigner), -1 (Q).
struct Distribution {
    int k = 0;

    static Distribution p() { return {+1}; }
    static Distribution wigner() { return {0}; }
    static Distribution q() { return {-1}; }

    bool operator==(const Distribution&) const = default;
};

Distribution distribution_from_name(const std::string& name);
std::string distribution_name(Distribution d);

// --- Hamiltonian terms ---------------------------------------------------

struct TransverseDrive {
    double omega = 0.0;
    int site = 0;
    std::optional<bool> rescale;  // overrides the model-level convention
    bool operator==(const TransverseDrive&) const = default;
};

struct LongitudinalField {
    double delta = 0.0;
    int site = 0;
    std::optional<bool> rescale;
    bool operator==(const LongitudinalField&) const = default;
};

struct OneAxisTwist {
    double g = 0.0;
    int site = 0;
    std::optional<bool> rescale;
    bool operator==(const OneAxisTwist&) const = default;
};

struct HeisenbergBond {
    double jx = 0.0, jy = 0.0, jz = 0.0;
    int site_i = 0, site_j = 0;
    std::optional<bool> rescale;
    bool operator==(const HeisenbergBond&) const = default;
};

using HamiltonianTerm =
    std::variant<TransverseDrive, LongitudinalField, OneAxisTwist, HeisenbergBond>;

// --- Dissipators ----------------------------------------------------------

enum class DissipatorKind { Decay, Gain, Dephasing };

struct DissipatorTerm {
    DissipatorKind kind = DissipatorKind::Decay;
    double rate = 0.0;
    std::optional<int> site;  // nullopt = all sites (expanded by validate)
    std::optional<bool> rescale;
    bool operator==(const DissipatorTerm&) const = default;
};

// --- Model ----------------------------------------------------------------

/// Declarative description of N coupled spin-S sites with Hamiltonian terms
/// and Lindblad dissipators. Immutable after validate(); safe to share.
struct SpinModel {
    int n_sites = 1;
    double spin_s = 0.5;  // half-integer, same at every site
    std::vector<HamiltonianTerm> hamiltonian;
    std::vector<DissipatorTerm> dissipators;
    Boundary boundary = Boundary::Open;
    bool rescale_by_2s = true;
    bool validated = false;

    bool operator==(const SpinModel&) const = default;
};

/// Returns a normalized model (bonds canonicalized with site_i < site_j,
/// "all sites" dissipators expanded) or throws ModelError. Idempotent.
SpinModel validate(SpinModel raw);

/// Appends nearest-neighbor bonds (i, i+1) over the whole chain, wrapping
/// once when the boundary is periodic.
void add_heisenberg_chain(SpinModel& model, double jx, double jy, double jz,
                          std::optional<bool> rescale = std::nullopt);

/// Coupling actually entering the equations of motion: bare / (2S) when the
/// 1/2S convention applies to this term, else bare.
double effective_coupling(const SpinModel& model, double bare,
                          bool rescale_by_default,
                          std::optional<bool> term_override);

double effective_rate(const SpinModel& model, const DissipatorTerm& term);
double effective_drive(const SpinModel& model, const TransverseDrive& term);
double effective_field(const SpinModel& model, const LongitudinalField& term);
double effective_twist(const SpinModel& model, const OneAxisTwist& term);
/// Rescaled (jx, jy, jz) for a bond.
std::array<double, 3> effective_bond(const SpinModel& model, const HeisenbergBond& term);

/// Largest characteristic rate of the model (couplings in natural units,
/// i.e. bare values when the 2S rescaling is active). Used for the default
/// time step.
double rate_scale(const SpinModel& model);

// JSON schema mirroring SpinModel field-for-field; unknown keys rejected.
SpinModel model_from_json_string(const std::string& text);
std::string model_to_json_string(const SpinModel& model, int indent = 2);

}  // namespace spintwa
