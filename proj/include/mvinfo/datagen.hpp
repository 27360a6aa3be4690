#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvinfo/info_engine.hpp"
#include "mvinfo/tensor.hpp"

namespace mvinfo::datagen {

// ---------------------------------------------------------------------------
// Discrete (T, X, S) tables with controllable multi-view redundancy.
//
// X = (T, U, W) and S = (C, V, W) where U/V are view-private styles, W is an
// optional shared style, and C equals T with probability 1-p (otherwise C is
// resampled uniformly). All factors carry random integer weights so an exact
// rational oracle can recompute every quantity. eps_info = I(X;T|S) grows
// with p from 0 to I(X;T).
// ---------------------------------------------------------------------------

struct DiscreteSpec {
    int t_size = 2;
    int x_style = 2;       // cardinality of U
    int s_style = 2;       // cardinality of V
    int shared_style = 1;  // cardinality of W; 1 means no shared component
    double corrupt_p = 0.1;
    int weight_resolution = 30; // random factor weights are drawn from [1, resolution]
    std::uint64_t seed = 1;
};

struct DiscreteTable {
    info::JointTable table;             // axes (T, X, S)
    std::vector<std::uint64_t> weights; // same layout, exact integers
};

DiscreteTable gen_discrete(const DiscreteSpec& spec);

// Fully random integer-weight table over the given (T, X, S) sizes, without
// any multi-view structure. Weights are strictly positive.
DiscreteTable random_discrete(const std::vector<int>& sizes, int max_weight, std::uint64_t seed);

// I(X;T|S) of a (T, X, S) table; axes are resolved by name.
double measure_epsilon_info(const info::JointTable& table);

// ---------------------------------------------------------------------------
// Continuous multi-view datasets: shared class content, view-private style.
// ---------------------------------------------------------------------------

struct ContinuousSpec {
    int classes = 50;
    int dim = 32;
    double mean_scale = 1.0;  // class mean entries ~ N(0, mean_scale^2)
    int style_dim = 8;
    double x_style_scale = 2.0;
    double s_style_scale = 2.0;
    double noise_scale = 0.5;
    int per_class = 20;
    std::uint64_t seed = 1;
};

enum class PairStrategy {
    SameClass,             // signal comes from a different example of the class
    SameInstanceAugmented, // signal is a style-resampled version of the instance
};

PairStrategy pair_strategy_from_string(const std::string& s);
std::string to_string(PairStrategy s);

struct MultiViewDataset {
    nn::Tensor x;             // [n x dim]
    nn::Tensor s;             // [n x dim]
    std::vector<int> labels;  // [n]
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    int train_classes = 0;
    int test_classes = 0; // test class ids start at train_classes
};

// Train and test class sets are disjoint: classes [0, C/2) train, rest test.
MultiViewDataset gen_continuous(const ContinuousSpec& spec, PairStrategy strategy);

// JSON manifest plus raw little-endian float64 matrices and an int64 label
// array.
void save_dataset(const std::filesystem::path& dir, const MultiViewDataset& ds,
                  const ContinuousSpec& spec, PairStrategy strategy);
MultiViewDataset load_dataset(const std::filesystem::path& dir);

nlohmann::ordered_json continuous_spec_to_json(const ContinuousSpec& spec);
ContinuousSpec continuous_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json discrete_spec_to_json(const DiscreteSpec& spec);
DiscreteSpec discrete_spec_from_json(const nlohmann::json& j);

} // namespace mvinfo::datagen
