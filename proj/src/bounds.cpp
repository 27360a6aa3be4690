#include "mvinfo/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mvinfo::bounds {

namespace {

void check_t_size(int t_size, const char* who) {
    if (t_size < 2) {
        throw std::invalid_argument(std::string(who) + ": |T| must be >= 2, got " +
                                    std::to_string(t_size));
    }
}

double domain_max(int t_size) { return 1.0 - 1.0 / static_cast<double>(t_size); }

void check_pe_domain(double p_e, int t_size, const char* who) {
    check_t_size(t_size, who);
    if (!(p_e >= 0.0) || p_e > domain_max(t_size) + 1e-12) {
        throw std::invalid_argument(std::string(who) + ": P_e = " + std::to_string(p_e) +
                                    " outside [0, 1 - 1/|T|]");
    }
}

} // namespace

double th(double x, int t_size) {
    check_t_size(t_size, "th");
    return std::min(std::max(x, 0.0), domain_max(t_size));
}

double binary_entropy(double p) {
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
    return h;
}

double thm3_upper(double h_t, double i_xs_given_t, double i_zx_given_st, double mi_estimate,
                  double slack, int t_size) {
    check_t_size(t_size, "thm3_upper");
    if (h_t < 0.0) throw std::invalid_argument("thm3_upper: H(T) must be nonnegative");
    if (slack < 0.0) throw std::invalid_argument("thm3_upper: slack must be nonnegative");
    const double exponent = h_t + i_xs_given_t + i_zx_given_st - mi_estimate + slack;
    return th(1.0 - std::exp(-exponent), t_size);
}

Thm4Bounds thm4_bounds(double p_e_sup, double eps_info, int t_size) {
    check_t_size(t_size, "thm4_bounds");
    if (p_e_sup >= 1.0 || p_e_sup < 0.0) {
        throw std::invalid_argument("thm4_bounds: P_e_sup = " + std::to_string(p_e_sup) +
                                    " outside the feasible Bayes range");
    }
    if (eps_info < 0.0) throw std::invalid_argument("thm4_bounds: eps_info must be nonnegative");

    const double log_t = std::log(static_cast<double>(t_size));
    const double raw_lower = -(std::log1p(-p_e_sup) + std::log(2.0)) / log_t;
    const double raw_upper = 1.0 - std::exp(-(std::log(2.0) + p_e_sup * log_t + eps_info));

    Thm4Bounds b;
    b.lower = th(raw_lower, t_size);
    b.upper = th(raw_upper, t_size);
    b.lower_clamped = raw_lower != b.lower;
    b.upper_clamped = raw_upper != b.upper;
    b.vacuous = raw_upper >= domain_max(t_size);
    return b;
}

double h_plus(double p_e, int t_size) {
    check_pe_domain(p_e, t_size, "h_plus");
    return binary_entropy(p_e) + p_e * std::log(static_cast<double>(t_size - 1));
}

double h_minus(double p_e, int t_size) {
    check_pe_domain(p_e, t_size, "h_minus");
    // The bracket (k-1)/k <= p <= k/(k+1) gives k = ceil(p / (1-p)); boundary
    // points evaluate identically under either neighbor.
    int k = 1;
    if (p_e > 0.0) {
        k = static_cast<int>(std::ceil(p_e / (1.0 - p_e) - 1e-12));
        k = std::clamp(k, 1, t_size - 1);
    }
    const double u = static_cast<double>(k) * (1.0 - p_e);
    return binary_entropy(u) + u * std::log(static_cast<double>(k));
}

double tight_upper_program(double rhs_nats, int t_size) {
    check_t_size(t_size, "tight_upper_program");
    if (rhs_nats < 0.0) return 0.0;
    const double hi_limit = domain_max(t_size);
    if (h_minus(hi_limit, t_size) <= rhs_nats) return hi_limit;
    double lo = 0.0, hi = hi_limit; // h_minus(lo) <= rhs < h_minus(hi)
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (h_minus(mid, t_size) <= rhs_nats) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

double tight_lower_program(double p_e_sup, int t_size) {
    check_pe_domain(p_e_sup, t_size, "tight_lower_program");
    const double target = h_minus(p_e_sup, t_size);
    if (target <= 0.0) return 0.0;
    double lo = 0.0, hi = domain_max(t_size); // h_plus(lo) < target <= h_plus(hi)
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (h_plus(mid, t_size) >= target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

BoundsReport compute_bounds_report(double h_t, double i_xs_given_t, double i_zx_given_st,
                                   double mi_estimate, double slack, int t_size,
                                   double eps_info, double p_e_sup) {
    BoundsReport r;
    r.h_t = h_t;
    r.i_xs_given_t = i_xs_given_t;
    r.i_zx_given_st = i_zx_given_st;
    r.mi_estimate = mi_estimate;
    r.slack = slack;
    r.eps_info = eps_info;
    r.p_e_sup = p_e_sup;
    r.t_size = t_size;

    r.arb_upper_loose = thm3_upper(h_t, i_xs_given_t, i_zx_given_st, mi_estimate, slack, t_size);
    r.arb_upper_tight = tight_upper_program(
        h_t + i_xs_given_t + i_zx_given_st - mi_estimate + slack, t_size);

    const auto loose = thm4_bounds(p_e_sup, eps_info, t_size);
    r.loose_lower = loose.lower;
    r.loose_upper = loose.upper;
    r.lower_clamped = loose.lower_clamped;
    r.upper_clamped = loose.upper_clamped;
    r.vacuous = loose.vacuous;
    r.tight_upper = tight_upper_program(h_plus(p_e_sup, t_size) + eps_info, t_size);
    r.tight_lower = tight_lower_program(p_e_sup, t_size);
    return r;
}

nlohmann::ordered_json BoundsReport::to_json() const {
    return {{"inputs",
             {{"h_t", h_t},
              {"i_xs_given_t", i_xs_given_t},
              {"i_zx_given_st", i_zx_given_st},
              {"mi_estimate", mi_estimate},
              {"slack", slack},
              {"eps_info", eps_info},
              {"p_e_sup", p_e_sup},
              {"t_size", t_size}}},
            {"arb_upper_loose", arb_upper_loose},
            {"arb_upper_tight", arb_upper_tight},
            {"loose_lower", loose_lower},
            {"loose_upper", loose_upper},
            {"tight_lower", tight_lower},
            {"tight_upper", tight_upper},
            {"lower_clamped", lower_clamped},
            {"upper_clamped", upper_clamped},
            {"vacuous", vacuous}};
}

} // namespace mvinfo::bounds
