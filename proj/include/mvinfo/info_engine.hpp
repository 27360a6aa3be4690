#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mvinfo::info {

// Exact information quantities over finite discrete joint distributions.
// Everything is in nats. All functions are pure and thread-safe.

struct Alphabet {
    std::string name;
    int size = 0;
};

// Dense probability tensor over 2-4 finite axes, row-major with the last
// axis fastest. Axis order is part of the table's identity. Entries must be
// nonnegative and sum to 1 within kNormTol.
class JointTable {
public:
    JointTable(std::vector<Alphabet> axes, std::vector<double> probs);

    // Builds the table from nonnegative integer weights (probabilities are
    // weight / total). The weight tensor is what the exact-rational test
    // oracle consumes; this constructor keeps both views consistent.
    static JointTable from_weights(std::vector<Alphabet> axes,
                                   const std::vector<std::uint64_t>& weights);

    int rank() const { return static_cast<int>(axes_.size()); }
    const std::vector<Alphabet>& axes() const { return axes_; }
    const std::vector<double>& probs() const { return probs_; }
    std::size_t cells() const { return probs_.size(); }
    int axis_size(int axis) const { return axes_[static_cast<std::size_t>(axis)].size; }
    int axis_index(const std::string& name) const; // throws on unknown name

    // Dense marginal over the given axes, in the given order.
    std::vector<double> marginal(std::span<const int> axis_subset) const;

    nlohmann::ordered_json to_json() const;
    static JointTable from_json(const nlohmann::json& j);

private:
    std::vector<Alphabet> axes_;
    std::vector<double> probs_;
    std::vector<std::size_t> strides_;
};

// H of the marginal on axis_subset; -sum p ln p with 0 ln 0 = 0.
double entropy(const JointTable& table, std::span<const int> axis_subset);

// H(target | given) = H(target u given) - H(given). Axis sets must be disjoint.
double conditional_entropy(const JointTable& table, std::span<const int> target_axes,
                           std::span<const int> given_axes);

// I(a;b) = H(a) + H(b) - H(a,b), clamped to 0 when within -kNormTol.
double mutual_info(const JointTable& table, std::span<const int> axes_a,
                   std::span<const int> axes_b);

// I(a;b|c) = H(a|c) + H(b|c) - H(a,b|c), same clamp.
double conditional_mutual_info(const JointTable& table, std::span<const int> axes_a,
                               std::span<const int> axes_b, std::span<const int> given_axes);

// I(a;b;c) = I(a;b) - I(a;b|c). Symmetric in its arguments; may be negative.
double interaction_info(const JointTable& table, std::span<const int> axes_a,
                        std::span<const int> axes_b, std::span<const int> axes_c);

// P_e = 1 - sum_z max_t P(t, z) over feature cells z. Result in [0, 1 - 1/|T|].
double bayes_error(const JointTable& table, int label_axis, std::span<const int> feature_axes);

// Named scalar quantities with provenance, for report emission.
struct InfoReport {
    struct Item {
        std::string name;
        double value = 0.0;
        std::string provenance;
    };
    std::vector<Item> items;

    void add(std::string name, double value, std::string provenance);
    nlohmann::ordered_json to_json() const;
};

} // namespace mvinfo::info
