#pragma once

#include <json.hpp>

namespace mvinfo::bounds {

// Bayes-error bound calculators, all in nats. Pure functions.

// Projection into the feasible Bayes range [0, 1 - 1/|T|].
double th(double x, int t_size);

double binary_entropy(double p);

// Upper bound on the error of an arbitrary representation:
// Th(1 - exp(-(H(T) + I(X;S|T) + I(Z;X|S,T) - mi_estimate + slack))).
// The estimation slack is caller-supplied; 0 means the asymptotic bound.
double thm3_upper(double h_t, double i_xs_given_t, double i_zx_given_st, double mi_estimate,
                  double slack, int t_size);

struct Thm4Bounds {
    double lower = 0;
    double upper = 0;
    bool lower_clamped = false;
    bool upper_clamped = false;
    bool vacuous = false; // upper hit the top of the feasible range
};

// Two-sided bounds on the error of the self-supervised representations in
// terms of the supervised error and the redundancy eps_info.
Thm4Bounds thm4_bounds(double p_e_sup, double eps_info, int t_size);

// Upper envelope H(P_e) + P_e ln(|T|-1) and lower envelope
// H(k(1-P_e)) + k(1-P_e) ln k on (k-1)/k <= P_e <= k/(k+1). Both are
// monotone nondecreasing on [0, 1 - 1/|T|]; h_minus is the minimum entropy
// of a single distribution with error P_e.
double h_plus(double p_e, int t_size);
double h_minus(double p_e, int t_size);

// sup{p : H-(p) <= rhs} and inf{p : H+(p) >= H-(p_e_sup)}, by bisection on
// the monotone envelopes (40 iterations, within 1e-10).
double tight_upper_program(double rhs_nats, int t_size);
double tight_lower_program(double p_e_sup, int t_size);

// All bound quantities for one scenario.
struct BoundsReport {
    // inputs echoed
    double h_t = 0;
    double i_xs_given_t = 0;
    double i_zx_given_st = 0;
    double mi_estimate = 0;
    double slack = 0;
    double eps_info = 0;
    double p_e_sup = 0;
    int t_size = 2;
    // arbitrary-representation upper bounds
    double arb_upper_loose = 0;
    double arb_upper_tight = 0;
    // self-supervised interval, loose and tightened
    double loose_lower = 0;
    double loose_upper = 0;
    double tight_lower = 0;
    double tight_upper = 0;
    bool lower_clamped = false;
    bool upper_clamped = false;
    bool vacuous = false;

    nlohmann::ordered_json to_json() const;
};

BoundsReport compute_bounds_report(double h_t, double i_xs_given_t, double i_zx_given_st,
                                   double mi_estimate, double slack, int t_size,
                                   double eps_info, double p_e_sup);

} // namespace mvinfo::bounds
