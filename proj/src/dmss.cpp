#include "mmhcl/dmss.hpp"

#include "mmhcl/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace mmhcl {

double entropy_spread(const std::vector<Vec>& probs_list) {
    const std::size_t k = probs_list.size();
    if (k < 2) throw std::invalid_argument("entropy_spread: need at least 2 distributions");
    std::vector<double> h(k);
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        h[i] = entropy(probs_list[i]);
        mean += h[i];
    }
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (double hi : h) var += (hi - mean) * (hi - mean);
    return std::sqrt(var / static_cast<double>(k));
}

SharePair intra_inconsistency(double e_a, double e_b) {
    require(e_a >= 0.0 && e_b >= 0.0, "intra_inconsistency: spreads must be non-negative");
    SharePair out;
    const double denom = e_a + e_b;
    if (denom == 0.0) {
        out.degenerate = true; // leave the 1/2-1/2 defaults
        return out;
    }
    out.a = e_a / denom;
    out.b = e_b / denom;
    return out;
}

SharePair inter_difference(const Vec& p_a, const Vec& p_b) {
    require(p_a.size() == p_b.size(), "inter_difference: dim mismatch");
    const double h_a = entropy(p_a);
    const double h_b = entropy(p_b);
    SharePair out;
    const double denom = h_a + h_b;
    if (denom == 0.0) {
        out.degenerate = true;
        return out;
    }
    out.a = h_a / denom;
    out.b = h_b / denom;
    return out;
}

double modality_uncertainty(double inc, double dif) { return inc + dif; }

DominanceChoice select_dominant(double u_a, double u_b) {
    if (!std::isfinite(u_a) || !std::isfinite(u_b))
        throw numeric_error("select_dominant: non-finite uncertainty");
    DominanceChoice c;
    if (u_a < u_b) {
        c.dominant = Modality::A;
    } else if (u_a > u_b) {
        c.dominant = Modality::B;
    } else {
        c.dominant = Modality::A;
        c.tie = true;
    }
    return c;
}

UncertaintyReport assess_uncertainty(const PredictionBundle& bundle_a,
                                     const PredictionBundle& bundle_b) {
    UncertaintyReport r;
    auto fill_entropies = [](const PredictionBundle& bundle, ModalityUncertainty& m) {
        m.h_modules.clear();
        double mean = 0.0;
        for (const Vec& p : bundle.probs) {
            m.h_modules.push_back(entropy(p));
            mean += m.h_modules.back();
        }
        mean /= static_cast<double>(m.h_modules.size());
        m.h_mean = mean;
    };
    fill_entropies(bundle_a, r.a);
    fill_entropies(bundle_b, r.b);
    r.a.spread = entropy_spread(bundle_a.probs);
    r.b.spread = entropy_spread(bundle_b.probs);

    const SharePair inc = intra_inconsistency(r.a.spread, r.b.spread);
    r.a.inc = inc.a;
    r.b.inc = inc.b;
    r.inc_degenerate = inc.degenerate;

    const SharePair dif = inter_difference(bundle_a.mean_probs, bundle_b.mean_probs);
    r.a.dif = dif.a;
    r.b.dif = dif.b;
    r.dif_degenerate = dif.degenerate;

    r.a.u = modality_uncertainty(r.a.inc, r.a.dif);
    r.b.u = modality_uncertainty(r.b.inc, r.b.dif);

    const DominanceChoice choice = select_dominant(r.a.u, r.b.u);
    r.dominant = choice.dominant;
    r.tie = choice.tie;
    return r;
}

nlohmann::json uncertainty_to_json(const UncertaintyReport& report) {
    auto side = [](const ModalityUncertainty& m) {
        return nlohmann::json{{"h_modules", m.h_modules}, {"h_mean", m.h_mean},
                              {"spread", m.spread},       {"inc", m.inc},
                              {"dif", m.dif},             {"u", m.u}};
    };
    nlohmann::json flags = nlohmann::json::array();
    if (report.inc_degenerate) flags.push_back("inc");
    if (report.dif_degenerate) flags.push_back("dif");
    if (report.tie) flags.push_back("tie");
    return nlohmann::json{{"A", side(report.a)},
                          {"B", side(report.b)},
                          {"dominant", modality_name(report.dominant)},
                          {"degenerate_flags", flags}};
}

} // namespace mmhcl
