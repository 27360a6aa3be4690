#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvinfo/common.hpp"
#include "mvinfo/info_engine.hpp"

namespace mvinfo::repr {

// Exhaustive search over deterministic encodings Z = F(X) on small alphabets,
// plus the information-chain verifiers built on top of it.

struct DeterministicMap {
    int source_size = 0;
    int z_size = 0;
    std::vector<int> image; // image[x] in [0, z_size)
};

// z_size^x_size, refusing to enumerate above kMapCapacity.
std::uint64_t map_space_size(int x_size, int z_size);

// Maps are ranked lexicographically by their image array; rank 0 is all-zeros.
DeterministicMap map_from_rank(std::uint64_t rank, int x_size, int z_size);

class MapEnumerator {
public:
    MapEnumerator(int x_size, int z_size);
    bool next(DeterministicMap& out); // false once exhausted
    std::uint64_t count() const { return count_; }

private:
    int x_size_;
    int z_size_;
    std::uint64_t count_;
    std::uint64_t rank_ = 0;
};

void for_each_map(int x_size, int z_size, const std::function<void(const DeterministicMap&)>& fn);

// P(t,x,s,z) = P(t,x,s) * 1[z = map(x)]. Axes of the input must be (T, X, S).
info::JointTable pushforward(const info::JointTable& table, const DeterministicMap& map);

// Per-map information quantities, all in nats.
struct MapQuantities {
    double i_zt = 0;  // I(Z;T)
    double i_zs = 0;  // I(Z;S)
    double h_z = 0;   // H(Z)
    double h_z_t = 0; // H(Z|T)
    double h_z_s = 0; // H(Z|S)
    double i_zx = 0;  // I(Z;X)
    double h_t_z = 0; // H(T|Z)
    double pe = 0;    // Bayes error of predicting T from Z
};

// Evaluates every map, indexed by rank. The kernel works on collapsed (T,Z),
// (S,Z), (X,Z) marginals and is parallelized over ranks; the reference goes
// through the full pushforward and the info engine, serially. Both must agree
// (tested); the reference stays as the ground truth for the kernel.
std::vector<MapQuantities> scan_maps(const info::JointTable& table, int z_size);
std::vector<MapQuantities> scan_maps_reference(const info::JointTable& table, int z_size);

struct OptimalSet {
    std::vector<std::uint64_t> members; // ranks, ascending = lexicographic
    MapQuantities achieved;             // quantities of the lex-smallest member
};

struct OptimalReprs {
    int x_size = 0;
    int z_size = 0;
    OptimalSet sup;     // argmax I(Z;T)
    OptimalSet sup_min; // within sup, argmin H(Z|T)
    OptimalSet ssl;     // argmax I(Z;S)
    OptimalSet ssl_min; // within ssl, argmin H(Z|S)
    std::vector<MapQuantities> scan;
};

// Ties within tie_tol of the extremum are kept as set members; the reported
// representative is the lexicographically smallest member, so results do not
// depend on how the enumeration was partitioned.
OptimalReprs find_optimal_reprs(const info::JointTable& table, int z_size = -1,
                                double tie_tol = kTieTol);

struct TheoremCheck {
    std::string name;
    std::string kind;    // "eq" (value = max abs residual) or "ge" (value = min slack)
    double value = 0;
    std::size_t members = 0;
    bool pass = false;
};

struct TheoremReport {
    std::string name;
    double eps_info = 0;
    std::vector<TheoremCheck> checks;
    bool pass = true;
    double min_slack = 0;    // over "ge" checks
    double max_residual = 0; // over "eq" checks

    void add_eq(std::string check_name, double max_abs_residual, std::size_t members);
    void add_ge(std::string check_name, double min_slack_value, std::size_t members);
    nlohmann::ordered_json to_json() const;
};

// Quantities of a single representation needed by the chain checks, computed
// from the full pushforward via the info engine.
struct MemberInfo {
    double i_zt = 0;
    double i_zx = 0;
    double h_z_t = 0;
    double i_zx_given_t = 0;  // I(Z;X|T)
    double i_zx_given_st = 0; // I(Z;X|S,T)
    double i_zt_given_x = 0;  // I(Z;T|X)
    double i_zs_given_x = 0;  // I(Z;S|X)
};
MemberInfo member_info(const info::JointTable& table, const DeterministicMap& map);

// I(X;T) = I(Z_sup;T) = I(Z_sup_min;T) >= I(Z_ssl;T) >= I(Z_ssl_min;T)
//   >= I(X;T) - eps_info, with eps_info = I(X;T|S) measured on the table.
TheoremReport verify_theorem1(const info::JointTable& table, const OptimalReprs& reprs);

// I(Z_ssl;X|T) = I(X;S|T) + I(Z_ssl;X|S,T) >= I(Z_ssl_min;X|T) = I(X;S|T)
//   >= I(Z_sup_min;X|T) = 0.
TheoremReport verify_theorem2(const info::JointTable& table, const OptimalReprs& reprs);

// Within the I(Z;T)-maximizers, the H(Z|T)-minimizing subset equals the
// I(Z;X)-minimizing subset.
TheoremReport verify_interchangeability(const info::JointTable& table, const OptimalReprs& reprs);

// Determinism conditions of the pushforward: I(Z;T|X) = I(Z;S|X) = 0.
TheoremReport verify_lemma1(const info::JointTable& table, const DeterministicMap& map);

} // namespace mvinfo::repr
