#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mvinfo/common.hpp"
#include "mvinfo/datagen.hpp"
#include "mvinfo/repr_search.hpp"
#include "mvinfo/rng.hpp"
#include "support/rational_oracle.hpp"

using namespace mvinfo;
using repr::DeterministicMap;

namespace {

// T = X = S, uniform over 2.
info::JointTable copy_world() {
    std::vector<double> p(8, 0.0);
    p[0] = 0.5; // (0,0,0)
    p[7] = 0.5; // (1,1,1)
    return info::JointTable({{"T", 2}, {"X", 2}, {"S", 2}}, p);
}

// X = (T, N) with N an independent fair bit, S = T. x = 2t + n.
info::JointTable content_style_world() {
    std::vector<double> p(2 * 4 * 2, 0.0);
    for (int t = 0; t < 2; ++t) {
        for (int n = 0; n < 2; ++n) {
            p[static_cast<std::size_t>((t * 4 + (2 * t + n)) * 2 + t)] = 0.25;
        }
    }
    return info::JointTable({{"T", 2}, {"X", 4}, {"S", 2}}, p);
}

// X = S = (T, W) with W a shared fair noise bit: the compression gap is ln 2.
info::JointTable shared_noise_world() {
    std::vector<double> p(2 * 4 * 4, 0.0);
    for (int t = 0; t < 2; ++t) {
        for (int w = 0; w < 2; ++w) {
            const int xs = 2 * t + w;
            p[static_cast<std::size_t>((t * 4 + xs) * 4 + xs)] = 0.25;
        }
    }
    return info::JointTable({{"T", 2}, {"X", 4}, {"S", 4}}, p);
}

oracle::WeightTable to_oracle(const datagen::DiscreteTable& dt) {
    std::vector<int> sizes;
    for (const auto& a : dt.table.axes()) sizes.push_back(a.size);
    return oracle::WeightTable{sizes, dt.weights};
}

} // namespace

TEST_CASE("map enumeration is lexicographic with exact counts") {
    std::vector<std::vector<int>> images;
    repr::for_each_map(2, 2, [&](const DeterministicMap& m) { images.push_back(m.image); });
    REQUIRE(images.size() == 4);
    CHECK(images[0] == std::vector<int>{0, 0});
    CHECK(images[1] == std::vector<int>{0, 1});
    CHECK(images[2] == std::vector<int>{1, 0});
    CHECK(images[3] == std::vector<int>{1, 1});

    CHECK(repr::map_space_size(1, 3) == 3);
    CHECK(repr::map_space_size(5, 5) == 3125);
    CHECK(repr::map_from_rank(0, 5, 5).image == std::vector<int>{0, 0, 0, 0, 0});

    CHECK_THROWS_AS(repr::map_space_size(8, 10), capacity_error);
    try {
        repr::map_space_size(8, 10);
    } catch (const capacity_error& e) {
        CHECK(std::string(e.what()).find("10^8") != std::string::npos);
    }
}

TEST_CASE("pushforward: identity, constant, determinism conditions") {
    auto table = copy_world();
    const std::vector<int> t{0}, x{1}, s{2}, z{3};

    auto identity = repr::map_from_rank(0, 2, 2);
    identity.image = {0, 1};
    const auto pf_id = repr::pushforward(table, identity);
    CHECK(info::mutual_info(pf_id, z, s) ==
          doctest::Approx(info::mutual_info(table, x, s)).epsilon(1e-12));

    DeterministicMap constant{2, 2, {0, 0}};
    const auto pf_const = repr::pushforward(table, constant);
    CHECK(info::mutual_info(pf_const, z, s) == doctest::Approx(0.0));
    CHECK(info::mutual_info(pf_const, z, t) == doctest::Approx(0.0));

    DeterministicMap wrong{3, 2, {0, 0, 1}};
    CHECK_THROWS_AS(repr::pushforward(table, wrong), std::invalid_argument);

    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto dt = datagen::random_discrete(
            {rng.range_int(2, 3), rng.range_int(2, 5), rng.range_int(2, 4)}, 89,
            rng.next_u64());
        const int xs = dt.table.axis_size(1);
        const int zs = rng.range_int(2, xs);
        auto m = repr::map_from_rank(rng.below(repr::map_space_size(xs, zs)), xs, zs);
        const auto rep = repr::verify_lemma1(dt.table, m);
        CHECK(rep.pass);
        CHECK(rep.max_residual <= 1e-10);
    }
}

TEST_CASE("kernel scan agrees with the serial pushforward reference") {
    Rng rng(32);
    for (int trial = 0; trial < 12; ++trial) {
        const auto dt = datagen::random_discrete(
            {rng.range_int(2, 3), rng.range_int(2, 4), rng.range_int(2, 4)}, 89,
            rng.next_u64());
        const int zs = dt.table.axis_size(1);
        const auto fast = repr::scan_maps(dt.table, zs);
        const auto ref = repr::scan_maps_reference(dt.table, zs);
        REQUIRE(fast.size() == ref.size());
        for (std::size_t r = 0; r < fast.size(); ++r) {
            CHECK(fast[r].i_zt == doctest::Approx(ref[r].i_zt).epsilon(1e-11));
            CHECK(fast[r].i_zs == doctest::Approx(ref[r].i_zs).epsilon(1e-11));
            CHECK(fast[r].h_z == doctest::Approx(ref[r].h_z).epsilon(1e-11));
            CHECK(fast[r].h_z_t == doctest::Approx(ref[r].h_z_t).epsilon(1e-11));
            CHECK(fast[r].h_z_s == doctest::Approx(ref[r].h_z_s).epsilon(1e-11));
            CHECK(fast[r].i_zx == doctest::Approx(ref[r].i_zx).epsilon(1e-11));
            CHECK(fast[r].h_t_z == doctest::Approx(ref[r].h_t_z).epsilon(1e-11));
            CHECK(std::abs(fast[r].pe - ref[r].pe) <= 1e-12);
        }
    }
}

TEST_CASE("scan is reproducible across runs") {
    const auto dt = datagen::random_discrete({3, 4, 4}, 89, 77);
    const auto a = repr::scan_maps(dt.table, 4);
    const auto b = repr::scan_maps(dt.table, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
        CHECK(a[r].i_zt == b[r].i_zt);
        CHECK(a[r].i_zs == b[r].i_zs);
        CHECK(a[r].pe == b[r].pe);
    }
}

TEST_CASE("optimal sets: copy world and droppable style channel") {
    const auto reprs_copy = repr::find_optimal_reprs(copy_world());
    CHECK(reprs_copy.ssl_min.achieved.i_zs == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(reprs_copy.ssl_min.achieved.h_z_s == doctest::Approx(0.0));

    const auto table = content_style_world();
    const auto reprs = repr::find_optimal_reprs(table);
    // The content projection x -> t has image [0,0,1,1]; rank in base 4.
    const std::uint64_t content_rank = 0 * 64 + 0 * 16 + 1 * 4 + 1;
    const bool in_ssl_min =
        std::find(reprs.ssl_min.members.begin(), reprs.ssl_min.members.end(), content_rank) !=
        reprs.ssl_min.members.end();
    CHECK(in_ssl_min);
    CHECK(reprs.ssl_min.achieved.i_zs == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(reprs.ssl_min.achieved.h_z_s == doctest::Approx(0.0).epsilon(1e-9));

    // Identity map is always a member of sup and ssl when z covers X.
    std::uint64_t identity_rank = 0;
    for (int i = 0; i < 4; ++i) identity_rank = identity_rank * 4 + static_cast<std::uint64_t>(i);
    CHECK(std::find(reprs.sup.members.begin(), reprs.sup.members.end(), identity_rank) !=
          reprs.sup.members.end());
    CHECK(std::find(reprs.ssl.members.begin(), reprs.ssl.members.end(), identity_rank) !=
          reprs.ssl.members.end());
}

TEST_CASE("optimal sets match a second enumeration in exact integer arithmetic") {
    Rng rng(33);
    for (int trial = 0; trial < 6; ++trial) {
        const auto dt = datagen::random_discrete({2, 4, 4}, 89, rng.next_u64());
        const auto wt = to_oracle(dt);
        const int zs = 4;
        const auto reprs = repr::find_optimal_reprs(dt.table, zs);

        // Re-derive per-map quantities from integer marginals only.
        const auto count = repr::map_space_size(4, zs);
        std::vector<double> i_zt(count), h_z_t(count), i_zs(count), h_z_s(count);
        const auto w_tx = oracle::marginal_weights(wt, std::vector<int>{0, 1});
        const auto w_sx = oracle::marginal_weights(wt, std::vector<int>{2, 1});
        for (std::uint64_t r = 0; r < count; ++r) {
            const auto m = repr::map_from_rank(r, 4, zs);
            oracle::WeightTable tz{{2, zs}, std::vector<std::uint64_t>(
                                               static_cast<std::size_t>(2 * zs), 0)};
            oracle::WeightTable sz{{4, zs}, std::vector<std::uint64_t>(
                                               static_cast<std::size_t>(4 * zs), 0)};
            for (int x = 0; x < 4; ++x) {
                const int z = m.image[static_cast<std::size_t>(x)];
                for (int t = 0; t < 2; ++t) {
                    tz.weights[static_cast<std::size_t>(t * zs + z)] +=
                        w_tx[static_cast<std::size_t>(t * 4 + x)];
                }
                for (int s = 0; s < 4; ++s) {
                    sz.weights[static_cast<std::size_t>(s * zs + z)] +=
                        w_sx[static_cast<std::size_t>(s * 4 + x)];
                }
            }
            const std::vector<int> a0{0}, a1{1};
            i_zt[r] = oracle::mutual_info(tz, a0, a1);
            h_z_t[r] = oracle::conditional_entropy(tz, a1, a0);
            i_zs[r] = oracle::mutual_info(sz, a0, a1);
            h_z_s[r] = oracle::conditional_entropy(sz, a1, a0);
        }

        auto arg_within = [&](const std::vector<double>& v, bool maximize,
                              const std::vector<std::uint64_t>* base) {
            std::vector<std::uint64_t> idx;
            double best = maximize ? -1e300 : 1e300;
            auto consider = [&](std::uint64_t r) {
                best = maximize ? std::max(best, v[r]) : std::min(best, v[r]);
            };
            if (base) {
                for (auto r : *base) consider(r);
            } else {
                for (std::uint64_t r = 0; r < count; ++r) consider(r);
            }
            auto keep = [&](std::uint64_t r) {
                if (maximize ? v[r] >= best - kTieTol : v[r] <= best + kTieTol)
                    idx.push_back(r);
            };
            if (base) {
                for (auto r : *base) keep(r);
            } else {
                for (std::uint64_t r = 0; r < count; ++r) keep(r);
            }
            return idx;
        };

        const auto sup_o = arg_within(i_zt, true, nullptr);
        const auto sup_min_o = arg_within(h_z_t, false, &sup_o);
        const auto ssl_o = arg_within(i_zs, true, nullptr);
        const auto ssl_min_o = arg_within(h_z_s, false, &ssl_o);

        CHECK(reprs.sup.members == sup_o);
        CHECK(reprs.sup_min.members == sup_min_o);
        CHECK(reprs.ssl.members == ssl_o);
        CHECK(reprs.ssl_min.members == ssl_min_o);
    }
}

TEST_CASE("information chains hold on structured multi-view tables") {
    Rng rng(34);
    const double probs[] = {0.0, 0.05, 0.1, 0.3, 1.0};
    for (int trial = 0; trial < 40; ++trial) {
        datagen::DiscreteSpec spec;
        spec.t_size = rng.range_int(2, 3);
        if (spec.t_size == 2) {
            const int shape = rng.range_int(0, 2);
            spec.x_style = shape == 0 ? 2 : 1;
            spec.shared_style = shape == 1 ? 2 : 1;
            spec.s_style = rng.range_int(1, 2);
            if (spec.shared_style == 2) spec.s_style = 1;
        } else {
            spec.x_style = spec.s_style = spec.shared_style = 1;
        }
        spec.corrupt_p = probs[rng.below(5)];
        spec.weight_resolution = 20;
        spec.seed = rng.next_u64();

        const auto dt = datagen::gen_discrete(spec);
        const auto reprs = repr::find_optimal_reprs(dt.table);
        const auto rep1 = repr::verify_theorem1(dt.table, reprs);
        if (!rep1.pass) {
            CAPTURE(trial);
            CAPTURE(rep1.to_json().dump(2));
        }
        CHECK(rep1.pass);
        const auto rep2 = repr::verify_theorem2(dt.table, reprs);
        if (!rep2.pass) {
            CAPTURE(trial);
            CAPTURE(rep2.to_json().dump(2));
        }
        CHECK(rep2.pass);

        // Every minimal self-supervised member drops everything (S,T) explains.
        for (auto r : reprs.ssl_min.members) {
            const auto m = repr::map_from_rank(r, reprs.x_size, reprs.z_size);
            CHECK(repr::member_info(dt.table, m).i_zx_given_st <= 1e-9);
        }
    }
}

TEST_CASE("task-information chain also holds on unstructured random tables") {
    Rng rng(35);
    for (int trial = 0; trial < 30; ++trial) {
        const auto dt = datagen::random_discrete(
            {rng.range_int(2, 3), rng.range_int(2, 4), rng.range_int(2, 4)}, 89,
            rng.next_u64());
        const auto reprs = repr::find_optimal_reprs(dt.table);
        CHECK(repr::verify_theorem1(dt.table, reprs).pass);
        CHECK(repr::verify_interchangeability(dt.table, reprs).pass);
    }
}

TEST_CASE("shared-noise world: the compression gap is the shared style") {
    const auto table = shared_noise_world();
    const std::vector<int> t{0}, x{1}, s{2};
    CHECK(info::conditional_mutual_info(table, x, s, t) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const auto reprs = repr::find_optimal_reprs(table);
    const auto rep2 = repr::verify_theorem2(table, reprs);
    CHECK(rep2.pass);
    for (auto r : reprs.ssl_min.members) {
        const auto m = repr::map_from_rank(r, reprs.x_size, reprs.z_size);
        CHECK(repr::member_info(table, m).i_zx_given_t ==
              doctest::Approx(std::log(2.0)).epsilon(1e-9));
    }
}

TEST_CASE("theorem chains hold in copy world with all values ln 2") {
    const auto table = copy_world();
    const auto reprs = repr::find_optimal_reprs(table);
    const auto rep1 = repr::verify_theorem1(table, reprs);
    CHECK(rep1.pass);
    CHECK(rep1.eps_info == doctest::Approx(0.0));
    CHECK(reprs.sup.achieved.i_zt == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(reprs.ssl_min.achieved.i_zt == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(repr::verify_theorem2(table, reprs).pass);
    CHECK(repr::verify_interchangeability(table, reprs).pass);
}

TEST_CASE("data processing inequality and relabeling invariance") {
    Rng rng(36);
    for (int trial = 0; trial < 50; ++trial) {
        const auto dt = datagen::random_discrete(
            {rng.range_int(2, 3), rng.range_int(2, 5), rng.range_int(2, 4)}, 89,
            rng.next_u64());
        const std::vector<int> t{0}, x{1};
        const double i_xt = info::mutual_info(dt.table, x, t);
        const int xs = dt.table.axis_size(1);
        const int zs = rng.range_int(2, xs);
        auto m = repr::map_from_rank(rng.below(repr::map_space_size(xs, zs)), xs, zs);
        const auto pf = repr::pushforward(dt.table, m);
        const std::vector<int> z{3};
        CHECK(info::mutual_info(pf, z, t) <= i_xt + 1e-10);

        // Relabel Z by a random permutation: quantities unchanged.
        std::vector<int> perm(static_cast<std::size_t>(zs));
        for (int i = 0; i < zs; ++i) perm[static_cast<std::size_t>(i)] = i;
        rng.shuffle(perm);
        auto relabeled = m;
        for (auto& v : relabeled.image) v = perm[static_cast<std::size_t>(v)];
        const auto pf2 = repr::pushforward(dt.table, relabeled);
        const std::vector<int> s{2};
        CHECK(info::mutual_info(pf2, z, t) ==
              doctest::Approx(info::mutual_info(pf, z, t)).epsilon(1e-12));
        CHECK(info::mutual_info(pf2, z, s) ==
              doctest::Approx(info::mutual_info(pf, z, s)).epsilon(1e-12));
        CHECK(info::entropy(pf2, z) == doctest::Approx(info::entropy(pf, z)).epsilon(1e-12));
    }
}

TEST_CASE("theorem verification refuses unattainable z sizes") {
    const auto table = content_style_world();
    const auto reprs = repr::find_optimal_reprs(table, 2);
    CHECK_THROWS_AS(repr::verify_theorem1(table, reprs), std::invalid_argument);
    CHECK_THROWS_AS(repr::verify_theorem2(table, reprs), std::invalid_argument);
}
