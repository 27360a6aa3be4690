#include "mvinfo/info_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvinfo/common.hpp"

namespace mvinfo::info {

namespace {

std::size_t checked_cell_count(const std::vector<Alphabet>& axes) {
    if (axes.size() < 2 || axes.size() > 4) {
        throw std::invalid_argument("JointTable: expected 2-4 axes, got " +
                                    std::to_string(axes.size()));
    }
    std::size_t cells = 1;
    for (const auto& a : axes) {
        if (a.size < 1) {
            throw std::invalid_argument("JointTable: axis '" + a.name + "' has size " +
                                        std::to_string(a.size));
        }
        cells *= static_cast<std::size_t>(a.size);
    }
    return cells;
}

void check_subset(const JointTable& table, std::span<const int> subset, const char* who) {
    if (subset.empty()) {
        throw std::invalid_argument(std::string(who) + ": empty axis subset");
    }
    std::vector<bool> seen(static_cast<std::size_t>(table.rank()), false);
    for (int a : subset) {
        if (a < 0 || a >= table.rank()) {
            throw std::invalid_argument(std::string(who) + ": axis index " + std::to_string(a) +
                                        " out of range");
        }
        if (seen[static_cast<std::size_t>(a)]) {
            throw std::invalid_argument(std::string(who) + ": repeated axis index " +
                                        std::to_string(a));
        }
        seen[static_cast<std::size_t>(a)] = true;
    }
}

void check_disjoint(std::span<const int> a, std::span<const int> b, const char* who) {
    for (int x : a) {
        for (int y : b) {
            if (x == y) {
                throw std::invalid_argument(std::string(who) + ": axis sets overlap on axis " +
                                            std::to_string(x));
            }
        }
    }
}

std::vector<int> join(std::span<const int> a, std::span<const int> b) {
    std::vector<int> out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

double entropy_of_dense(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

} // namespace

JointTable::JointTable(std::vector<Alphabet> axes, std::vector<double> probs)
    : axes_(std::move(axes)), probs_(std::move(probs)) {
    const std::size_t cells = checked_cell_count(axes_);
    if (probs_.size() != cells) {
        throw std::invalid_argument("JointTable: " + std::to_string(probs_.size()) +
                                    " entries for " + std::to_string(cells) + " cells");
    }
    double sum = 0.0;
    for (double p : probs_) {
        if (p < 0.0) throw std::invalid_argument("JointTable: negative probability entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kNormTol) {
        throw std::invalid_argument("JointTable: entries sum to " + std::to_string(sum));
    }
    strides_.assign(axes_.size(), 1);
    for (int i = rank() - 2; i >= 0; --i) {
        strides_[static_cast<std::size_t>(i)] =
            strides_[static_cast<std::size_t>(i + 1)] *
            static_cast<std::size_t>(axes_[static_cast<std::size_t>(i + 1)].size);
    }
}

JointTable JointTable::from_weights(std::vector<Alphabet> axes,
                                    const std::vector<std::uint64_t>& weights) {
    std::uint64_t total = 0;
    for (std::uint64_t w : weights) total += w;
    if (total == 0) throw std::invalid_argument("JointTable: all weights are zero");
    std::vector<double> probs(weights.size());
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        probs[i] = static_cast<double>(weights[i]) * inv;
    }
    return JointTable(std::move(axes), std::move(probs));
}

int JointTable::axis_index(const std::string& name) const {
    for (int i = 0; i < rank(); ++i) {
        if (axes_[static_cast<std::size_t>(i)].name == name) return i;
    }
    throw std::invalid_argument("JointTable: no axis named '" + name + "'");
}

std::vector<double> JointTable::marginal(std::span<const int> axis_subset) const {
    check_subset(*this, axis_subset, "marginal");
    std::size_t out_cells = 1;
    for (int a : axis_subset) out_cells *= static_cast<std::size_t>(axis_size(a));
    std::vector<double> out(out_cells, 0.0);

    const std::size_t n = probs_.size();
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t key = 0;
        for (int a : axis_subset) {
            const auto ai = static_cast<std::size_t>(a);
            const std::size_t coord = (flat / strides_[ai]) % static_cast<std::size_t>(axes_[ai].size);
            key = key * static_cast<std::size_t>(axes_[ai].size) + coord;
        }
        out[key] += probs_[flat];
    }
    return out;
}

nlohmann::ordered_json JointTable::to_json() const {
    nlohmann::ordered_json j;
    j["axes"] = nlohmann::ordered_json::array();
    for (const auto& a : axes_) {
        j["axes"].push_back({{"name", a.name}, {"size", a.size}});
    }
    j["probs"] = probs_;
    return j;
}

JointTable JointTable::from_json(const nlohmann::json& j) {
    if (!j.contains("axes") || !j.contains("probs")) {
        throw std::invalid_argument("JointTable JSON needs 'axes' and 'probs'");
    }
    std::vector<Alphabet> axes;
    for (const auto& a : j.at("axes")) {
        axes.push_back({a.at("name").get<std::string>(), a.at("size").get<int>()});
    }
    return JointTable(std::move(axes), j.at("probs").get<std::vector<double>>());
}

double entropy(const JointTable& table, std::span<const int> axis_subset) {
    check_subset(table, axis_subset, "entropy");
    return entropy_of_dense(table.marginal(axis_subset));
}

double conditional_entropy(const JointTable& table, std::span<const int> target_axes,
                           std::span<const int> given_axes) {
    check_subset(table, target_axes, "conditional_entropy");
    check_subset(table, given_axes, "conditional_entropy");
    check_disjoint(target_axes, given_axes, "conditional_entropy");
    const auto all = join(target_axes, given_axes);
    return entropy(table, all) - entropy(table, given_axes);
}

double mutual_info(const JointTable& table, std::span<const int> axes_a,
                   std::span<const int> axes_b) {
    check_subset(table, axes_a, "mutual_info");
    check_subset(table, axes_b, "mutual_info");
    check_disjoint(axes_a, axes_b, "mutual_info");
    const auto ab = join(axes_a, axes_b);
    double mi = entropy(table, axes_a) + entropy(table, axes_b) - entropy(table, ab);
    if (mi < 0.0 && mi >= -kNormTol) mi = 0.0;
    return mi;
}

double conditional_mutual_info(const JointTable& table, std::span<const int> axes_a,
                               std::span<const int> axes_b, std::span<const int> given_axes) {
    check_subset(table, axes_a, "conditional_mutual_info");
    check_subset(table, axes_b, "conditional_mutual_info");
    check_subset(table, given_axes, "conditional_mutual_info");
    check_disjoint(axes_a, axes_b, "conditional_mutual_info");
    check_disjoint(axes_a, given_axes, "conditional_mutual_info");
    check_disjoint(axes_b, given_axes, "conditional_mutual_info");
    const auto ac = join(axes_a, given_axes);
    const auto bc = join(axes_b, given_axes);
    const auto abc = join(ac, axes_b);
    const double h_c = entropy(table, given_axes);
    double cmi = (entropy(table, ac) - h_c) + (entropy(table, bc) - h_c) -
                 (entropy(table, abc) - h_c);
    if (cmi < 0.0 && cmi >= -kNormTol) cmi = 0.0;
    return cmi;
}

double interaction_info(const JointTable& table, std::span<const int> axes_a,
                        std::span<const int> axes_b, std::span<const int> axes_c) {
    check_subset(table, axes_c, "interaction_info");
    check_disjoint(axes_a, axes_c, "interaction_info");
    check_disjoint(axes_b, axes_c, "interaction_info");
    return mutual_info(table, axes_a, axes_b) -
           conditional_mutual_info(table, axes_a, axes_b, axes_c);
}

double bayes_error(const JointTable& table, int label_axis, std::span<const int> feature_axes) {
    const int label_arr[] = {label_axis};
    check_subset(table, label_arr, "bayes_error");
    check_subset(table, feature_axes, "bayes_error");
    check_disjoint(label_arr, feature_axes, "bayes_error");

    // Marginal over (label, features) with label slowest: index = t * Z + z.
    auto axes = join(label_arr, feature_axes);
    const auto joint = table.marginal(axes);
    const auto t_size = static_cast<std::size_t>(table.axis_size(label_axis));
    const std::size_t z_cells = joint.size() / t_size;

    double total = 0.0;
    double sum_max = 0.0;
    for (std::size_t z = 0; z < z_cells; ++z) {
        double best = 0.0;
        for (std::size_t t = 0; t < t_size; ++t) {
            const double p = joint[t * z_cells + z];
            total += p;
            best = std::max(best, p);
        }
        sum_max += best; // all-zero feature slices contribute nothing
    }
    if (total <= 0.0) throw std::invalid_argument("bayes_error: table has no mass");
    return 1.0 - sum_max;
}

void InfoReport::add(std::string name, double value, std::string provenance) {
    items.push_back({std::move(name), value, std::move(provenance)});
}

nlohmann::ordered_json InfoReport::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& it : items) {
        j.push_back({{"name", it.name}, {"value", it.value}, {"provenance", it.provenance}});
    }
    return j;
}

} // namespace mvinfo::info
