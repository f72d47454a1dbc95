#include "spintwa/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace spintwa {

using nlohmann::json;

Distribution distribution_from_name(const std::string& name) {
    if (name == "p" || name == "P") return Distribution::p();
    if (name == "wigner" || name == "w" || name == "W") return Distribution::wigner();
    if (name == "q" || name == "Q") return Distribution::q();
    throw ModelError("unknown distribution '" + name + "' (expected p, wigner or q)");
}

std::string distribution_name(Distribution d) {
    switch (d.k) {
        case +1: return "p";
        case 0: return "wigner";
        case -1: return "q";
        default: throw ModelError("distribution k must be -1, 0 or +1");
    }
}

namespace {

void require_finite(double x, const std::string& what) {
    if (!std::isfinite(x)) throw ModelError(what + " must be finite");
}

void check_site(int site, int n_sites, const std::string& what) {
    if (site < 0 || site >= n_sites)
        throw ModelError(what + ": site index " + std::to_string(site) +
                         " out of range [0, " + std::to_string(n_sites) + ")");
}

// Bonds connect nearest neighbors on the chain; the wrap pair (0, N-1)
// requires periodic boundary.
void check_bond(const HeisenbergBond& b, const SpinModel& m) {
    check_site(b.site_i, m.n_sites, "heisenberg_bond");
    check_site(b.site_j, m.n_sites, "heisenberg_bond");
    if (b.site_i == b.site_j)
        throw ModelError("heisenberg_bond: site_i and site_j must differ");
    const int lo = std::min(b.site_i, b.site_j);
    const int hi = std::max(b.site_i, b.site_j);
    if (hi - lo == 1) return;
    if (lo == 0 && hi == m.n_sites - 1) {
        if (m.boundary != Boundary::Periodic)
            throw ModelError("heisenberg_bond: wrap-around bond (" + std::to_string(b.site_i) +
                             ", " + std::to_string(b.site_j) + ") on open boundary");
        return;
    }
    throw ModelError("heisenberg_bond: sites (" + std::to_string(b.site_i) + ", " +
                     std::to_string(b.site_j) + ") are not nearest neighbors");
}

}  // namespace

SpinModel validate(SpinModel m) {
    if (m.n_sites < 1) throw ModelError("n_sites must be >= 1");
    require_finite(m.spin_s, "spin_s");
    const double two_s = 2.0 * m.spin_s;
    if (two_s < 1.0 - 1e-9 || std::abs(two_s - std::round(two_s)) > 1e-9)
        throw ModelError("spin_s must be a positive half-integer");
    m.spin_s = std::round(two_s) / 2.0;

    for (auto& term : m.hamiltonian) {
        std::visit(
            [&](auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, TransverseDrive>) {
                    require_finite(t.omega, "transverse_drive omega");
                    check_site(t.site, m.n_sites, "transverse_drive");
                } else if constexpr (std::is_same_v<T, LongitudinalField>) {
                    require_finite(t.delta, "longitudinal_field delta");
                    check_site(t.site, m.n_sites, "longitudinal_field");
                } else if constexpr (std::is_same_v<T, OneAxisTwist>) {
                    require_finite(t.g, "one_axis_twist g");
                    check_site(t.site, m.n_sites, "one_axis_twist");
                } else if constexpr (std::is_same_v<T, HeisenbergBond>) {
                    require_finite(t.jx, "heisenberg_bond jx");
                    require_finite(t.jy, "heisenberg_bond jy");
                    require_finite(t.jz, "heisenberg_bond jz");
                    check_bond(t, m);
                    if (t.site_i > t.site_j) std::swap(t.site_i, t.site_j);
                }
            },
            term);
    }

    std::vector<DissipatorTerm> expanded;
    expanded.reserve(m.dissipators.size());
    for (const auto& d : m.dissipators) {
        require_finite(d.rate, "dissipator rate");
        if (d.rate < 0.0) throw ModelError("negative rate in dissipator");
        if (d.site) {
            check_site(*d.site, m.n_sites, "dissipator");
            expanded.push_back(d);
        } else {
            for (int i = 0; i < m.n_sites; ++i) {
                DissipatorTerm e = d;
                e.site = i;
                expanded.push_back(e);
            }
        }
    }
    m.dissipators = std::move(expanded);
    m.validated = true;
    return m;
}

void add_heisenberg_chain(SpinModel& model, double jx, double jy, double jz,
                          std::optional<bool> rescale) {
    for (int i = 0; i + 1 < model.n_sites; ++i)
        model.hamiltonian.push_back(HeisenbergBond{jx, jy, jz, i, i + 1, rescale});
    if (model.boundary == Boundary::Periodic && model.n_sites > 2)
        model.hamiltonian.push_back(HeisenbergBond{jx, jy, jz, 0, model.n_sites - 1, rescale});
}

double effective_coupling(const SpinModel& model, double bare, bool rescale_by_default,
                          std::optional<bool> term_override) {
    const bool rescale = term_override.value_or(rescale_by_default);
    return rescale ? bare / (2.0 * model.spin_s) : bare;
}

double effective_rate(const SpinModel& model, const DissipatorTerm& term) {
    // Dephasing follows the unrescaled convention unless overridden per term.
    const bool by_default =
        term.kind == DissipatorKind::Dephasing ? false : model.rescale_by_2s;
    return effective_coupling(model, term.rate, by_default, term.rescale);
}

double effective_drive(const SpinModel& model, const TransverseDrive& term) {
    return effective_coupling(model, term.omega, false, term.rescale);
}

double effective_field(const SpinModel& model, const LongitudinalField& term) {
    return effective_coupling(model, term.delta, false, term.rescale);
}

double effective_twist(const SpinModel& model, const OneAxisTwist& term) {
    return effective_coupling(model, term.g, model.rescale_by_2s, term.rescale);
}

std::array<double, 3> effective_bond(const SpinModel& model, const HeisenbergBond& term) {
    return {effective_coupling(model, term.jx, model.rescale_by_2s, term.rescale),
            effective_coupling(model, term.jy, model.rescale_by_2s, term.rescale),
            effective_coupling(model, term.jz, model.rescale_by_2s, term.rescale)};
}

double rate_scale(const SpinModel& model) {
    const double two_s = 2.0 * model.spin_s;
    double scale = 0.0;
    auto bump = [&](double eff, bool rescaled_family) {
        // Natural rate of a term: effective coupling times 2S for the
        // rescaled families (their drift coefficients carry |amplitude|^2 ~ 2S).
        scale = std::max(scale, std::abs(eff) * (rescaled_family ? two_s : 1.0));
    };
    for (const auto& term : model.hamiltonian) {
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, TransverseDrive>)
                    bump(effective_drive(model, t), false);
                else if constexpr (std::is_same_v<T, LongitudinalField>)
                    bump(effective_field(model, t), false);
                else if constexpr (std::is_same_v<T, OneAxisTwist>)
                    bump(effective_twist(model, t), true);
                else if constexpr (std::is_same_v<T, HeisenbergBond>) {
                    const auto j = effective_bond(model, t);
                    bump(std::abs(j[0]) + std::abs(j[1]) + std::abs(j[2]), true);
                }
            },
            term);
    }
    for (const auto& d : model.dissipators)
        bump(effective_rate(model, d), d.kind != DissipatorKind::Dephasing);
    return scale > 0.0 ? scale : 1.0;
}

// --- JSON schema ------------------------------------------------------------

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ModelError(where + ": expected a JSON object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ModelError(where + ": unknown key '" + item.key() + "'");
}

std::optional<bool> opt_rescale(const json& j) {
    if (j.contains("rescale")) return j.at("rescale").get<bool>();
    return std::nullopt;
}

HamiltonianTerm ham_from_json(const json& j, std::vector<HamiltonianTerm>& out,
                              const SpinModel& model, bool& expanded_chain) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "transverse_drive") {
        check_keys(j, {"type", "omega", "site", "rescale"}, "transverse_drive");
        return TransverseDrive{j.at("omega").get<double>(), j.at("site").get<int>(),
                               opt_rescale(j)};
    }
    if (type == "longitudinal_field") {
        check_keys(j, {"type", "delta", "site", "rescale"}, "longitudinal_field");
        return LongitudinalField{j.at("delta").get<double>(), j.at("site").get<int>(),
                                 opt_rescale(j)};
    }
    if (type == "one_axis_twist") {
        check_keys(j, {"type", "g", "site", "rescale"}, "one_axis_twist");
        return OneAxisTwist{j.at("g").get<double>(), j.at("site").get<int>(), opt_rescale(j)};
    }
    if (type == "heisenberg_bond") {
        check_keys(j, {"type", "jx", "jy", "jz", "site_i", "site_j", "rescale"},
                   "heisenberg_bond");
        return HeisenbergBond{j.at("jx").get<double>(), j.at("jy").get<double>(),
                              j.at("jz").get<double>(), j.at("site_i").get<int>(),
                              j.at("site_j").get<int>(), opt_rescale(j)};
    }
    if (type == "heisenberg_chain") {
        // Convenience constructor: expands to nearest-neighbor bonds.
        check_keys(j, {"type", "jx", "jy", "jz", "rescale"}, "heisenberg_chain");
        SpinModel tmp = model;
        tmp.hamiltonian.clear();
        add_heisenberg_chain(tmp, j.at("jx").get<double>(), j.at("jy").get<double>(),
                             j.at("jz").get<double>(), opt_rescale(j));
        out.insert(out.end(), tmp.hamiltonian.begin(), tmp.hamiltonian.end());
        expanded_chain = true;
        return TransverseDrive{};  // unused
    }
    throw ModelError("unknown hamiltonian term type '" + type + "'");
}

DissipatorTerm diss_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    DissipatorTerm d;
    if (type == "decay")
        d.kind = DissipatorKind::Decay;
    else if (type == "gain")
        d.kind = DissipatorKind::Gain;
    else if (type == "dephasing")
        d.kind = DissipatorKind::Dephasing;
    else
        throw ModelError("unknown dissipator type '" + type + "'");
    check_keys(j, {"type", "rate", "site", "rescale"}, type);
    d.rate = j.at("rate").get<double>();
    if (j.contains("site")) {
        const auto& s = j.at("site");
        if (s.is_string()) {
            if (s.get<std::string>() != "all")
                throw ModelError(type + ": site must be an index or \"all\"");
        } else {
            d.site = s.get<int>();
        }
    }
    d.rescale = opt_rescale(j);
    return d;
}

}  // namespace

SpinModel model_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelError(std::string("model JSON parse error: ") + e.what());
    }
    check_keys(j, {"n_sites", "spin_s", "boundary", "rescale_by_2s", "hamiltonian",
                   "dissipators"},
               "model");
    SpinModel m;
    try {
        m.n_sites = j.at("n_sites").get<int>();
        m.spin_s = j.at("spin_s").get<double>();
        if (j.contains("boundary")) {
            const std::string b = j.at("boundary").get<std::string>();
            if (b == "open")
                m.boundary = Boundary::Open;
            else if (b == "periodic")
                m.boundary = Boundary::Periodic;
            else
                throw ModelError("boundary must be \"open\" or \"periodic\"");
        }
        if (j.contains("rescale_by_2s")) m.rescale_by_2s = j.at("rescale_by_2s").get<bool>();
        if (j.contains("hamiltonian")) {
            for (const auto& t : j.at("hamiltonian")) {
                bool expanded = false;
                HamiltonianTerm term = ham_from_json(t, m.hamiltonian, m, expanded);
                if (!expanded) m.hamiltonian.push_back(term);
            }
        }
        if (j.contains("dissipators"))
            for (const auto& t : j.at("dissipators")) m.dissipators.push_back(diss_from_json(t));
    } catch (const json::exception& e) {
        throw ModelError(std::string("model JSON: ") + e.what());
    }
    return validate(std::move(m));
}

std::string model_to_json_string(const SpinModel& model, int indent) {
    json terms = json::array();
    for (const auto& term : model.hamiltonian) {
        json t;
        std::visit(
            [&](const auto& h) {
                using T = std::decay_t<decltype(h)>;
                if constexpr (std::is_same_v<T, TransverseDrive>)
                    t = {{"type", "transverse_drive"}, {"omega", h.omega}, {"site", h.site}};
                else if constexpr (std::is_same_v<T, LongitudinalField>)
                    t = {{"type", "longitudinal_field"}, {"delta", h.delta}, {"site", h.site}};
                else if constexpr (std::is_same_v<T, OneAxisTwist>)
                    t = {{"type", "one_axis_twist"}, {"g", h.g}, {"site", h.site}};
                else if constexpr (std::is_same_v<T, HeisenbergBond>)
                    t = {{"type", "heisenberg_bond"}, {"jx", h.jx},     {"jy", h.jy},
                         {"jz", h.jz},                {"site_i", h.site_i}, {"site_j", h.site_j}};
                if (h.rescale) t["rescale"] = *h.rescale;
            },
            term);
        terms.push_back(t);
    }
    json diss = json::array();
    for (const auto& d : model.dissipators) {
        json t;
        switch (d.kind) {
            case DissipatorKind::Decay: t["type"] = "decay"; break;
            case DissipatorKind::Gain: t["type"] = "gain"; break;
            case DissipatorKind::Dephasing: t["type"] = "dephasing"; break;
        }
        t["rate"] = d.rate;
        if (d.site)
            t["site"] = *d.site;
        else
            t["site"] = "all";
        if (d.rescale) t["rescale"] = *d.rescale;
        diss.push_back(t);
    }
    json j = {{"n_sites", model.n_sites},
              {"spin_s", model.spin_s},
              {"boundary", model.boundary == Boundary::Periodic ? "periodic" : "open"},
              {"rescale_by_2s", model.rescale_by_2s},
              {"hamiltonian", terms},
              {"dissipators", diss}};
    return j.dump(indent);
}

}  // namespace spintwa
