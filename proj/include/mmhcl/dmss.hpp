#pragma once

#include "mmhcl/osrs.hpp"

#include <nlohmann/json_fwd.hpp>
#include <vector>

namespace mmhcl {

struct ModalityUncertainty {
    std::vector<double> h_modules; // per-module prediction entropies (nats)
    double h_mean = 0.0;
    double spread = 0.0; // population std of h_modules
    double inc = 0.0;    // spread share across modalities
    double dif = 0.0;    // mean-prediction entropy share
    double u = 0.0;      // inc + dif
};

/// Both modalities' uncertainty terms plus the dominance decision.
/// Invariants: inc_a + inc_b = 1, dif_a + dif_b = 1, u_a + u_b = 2.
struct UncertaintyReport {
    ModalityUncertainty a, b;
    Modality dominant = Modality::A;
    bool tie = false;            // exact u tie, resolved toward A
    bool inc_degenerate = false; // both spreads zero, shares forced to 1/2
    bool dif_degenerate = false; // both mean entropies zero, shares forced to 1/2
};

/// Population standard deviation of the K module prediction entropies.
/// Throws std::invalid_argument for K < 2.
double entropy_spread(const std::vector<Vec>& probs_list);

struct SharePair {
    double a = 0.5, b = 0.5;
    bool degenerate = false;
};

/// Spread shares e*/(e_a + e_b); a zero denominator resolves to an exact
/// half/half split with the degenerate flag set.
SharePair intra_inconsistency(double e_a, double e_b);

/// Mean-prediction entropy shares H(p*)/(H(p_a) + H(p_b)); same
/// degenerate convention when both distributions are one-hot.
SharePair inter_difference(const Vec& p_a, const Vec& p_b);

/// Total uncertainty of one modality.
double modality_uncertainty(double inc, double dif);

struct DominanceChoice {
    Modality dominant = Modality::A;
    bool tie = false;
};

/// Lower uncertainty wins; exact ties go to A. Throws numeric_error on
/// non-finite input.
DominanceChoice select_dominant(double u_a, double u_b);

/// Full uncertainty pipeline over two prediction bundles.
UncertaintyReport assess_uncertainty(const PredictionBundle& bundle_a,
                                     const PredictionBundle& bundle_b);

/// JSON record with fields h_modules, h_mean, spread, inc, dif, u per
/// modality plus dominant and degenerate_flags.
nlohmann::json uncertainty_to_json(const UncertaintyReport& report);

} // namespace mmhcl
