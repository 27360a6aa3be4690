#include "mvinfo/eval_protocols.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mvinfo/common.hpp"
#include "mvinfo/rng.hpp"

namespace mvinfo::eval {

namespace {

std::map<int, std::vector<std::size_t>> rows_by_label(const std::vector<int>& labels,
                                                      const char* who) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) {
            throw std::invalid_argument(std::string(who) + ": negative label at row " +
                                        std::to_string(i));
        }
        groups[labels[i]].push_back(i);
    }
    return groups;
}

nn::Tensor normalized_copy(const nn::Tensor& t) {
    nn::Tensor out = t;
    nn::normalize_rows(out);
    return out;
}

} // namespace

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["protocol"] = protocol;
    j["accuracy"] = accuracy;
    j["chance"] = chance;
    j["labeled_per_class"] = labeled_per_class;
    j["seed"] = seed;
    j["per_class_accuracy"] = nlohmann::ordered_json::array();
    for (const auto& [label, acc] : per_class_accuracy) {
        j["per_class_accuracy"].push_back({{"label", label}, {"accuracy", acc}});
    }
    return j;
}

EvalReport knn_cosine_eval(const nn::Tensor& embeddings, const std::vector<int>& labels,
                           int labeled_per_class, std::uint64_t seed) {
    if (embeddings.rows() != labels.size()) {
        throw std::invalid_argument("knn_cosine_eval: embeddings and labels disagree on rows");
    }
    if (labeled_per_class < 1) {
        throw std::invalid_argument("knn_cosine_eval: labeled_per_class must be >= 1");
    }
    auto groups = rows_by_label(labels, "knn_cosine_eval");

    Rng rng(substream_seed(seed, "knn_labeled_split"));
    std::vector<std::size_t> labeled;
    std::vector<bool> is_labeled(labels.size(), false);
    for (auto& [label, rows] : groups) {
        if (rows.size() <= static_cast<std::size_t>(labeled_per_class)) {
            throw std::invalid_argument("knn_cosine_eval: class " + std::to_string(label) +
                                        " has only " + std::to_string(rows.size()) +
                                        " examples, needs more than " +
                                        std::to_string(labeled_per_class));
        }
        auto shuffled = rows;
        rng.shuffle(shuffled);
        for (int k = 0; k < labeled_per_class; ++k) {
            labeled.push_back(shuffled[static_cast<std::size_t>(k)]);
            is_labeled[shuffled[static_cast<std::size_t>(k)]] = true;
        }
    }
    std::sort(labeled.begin(), labeled.end()); // tie-break order: lowest row index

    const auto norm = normalized_copy(embeddings);
    const std::size_t d = norm.cols();

    std::vector<std::size_t> queries;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!is_labeled[i]) queries.push_back(i);
    }

    std::vector<int> predicted(queries.size(), -1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long long qi = 0; qi < static_cast<long long>(queries.size()); ++qi) {
        const double* q = norm.row(queries[static_cast<std::size_t>(qi)]);
        double best = -2.0;
        std::size_t best_row = labeled.front();
        for (std::size_t l : labeled) {
            const double* lr = norm.row(l);
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += q[k] * lr[k];
            if (dot > best) { // strict: earlier labeled rows win ties
                best = dot;
                best_row = l;
            }
        }
        predicted[static_cast<std::size_t>(qi)] = labels[best_row];
    }

    EvalReport report;
    report.protocol = "knn_cosine";
    report.labeled_per_class = labeled_per_class;
    report.seed = seed;
    report.chance = 1.0 / static_cast<double>(groups.size());

    std::map<int, std::pair<int, int>> per_class; // label -> (correct, total)
    int correct = 0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const int truth = labels[queries[qi]];
        auto& [c_correct, c_total] = per_class[truth];
        ++c_total;
        if (predicted[qi] == truth) {
            ++correct;
            ++c_correct;
        }
    }
    report.accuracy = queries.empty() ? 0.0
                                      : static_cast<double>(correct) /
                                            static_cast<double>(queries.size());
    for (const auto& [label, counts] : per_class) {
        report.per_class_accuracy.emplace_back(
            label, static_cast<double>(counts.first) / static_cast<double>(counts.second));
    }
    return report;
}

EvalReport linear_eval(const nn::Tensor& embeddings_train, const std::vector<int>& labels_train,
                       const nn::Tensor& embeddings_test, const std::vector<int>& labels_test) {
    if (embeddings_train.rows() != labels_train.size() ||
        embeddings_test.rows() != labels_test.size()) {
        throw std::invalid_argument("linear_eval: embeddings and labels disagree on rows");
    }
    if (embeddings_train.cols() != embeddings_test.cols()) {
        throw std::invalid_argument("linear_eval: train/test embedding dims differ");
    }
    auto groups = rows_by_label(labels_train, "linear_eval");
    if (groups.size() < 2) {
        throw std::invalid_argument("linear_eval: needs at least 2 classes, got " +
                                    std::to_string(groups.size()));
    }

    std::vector<int> class_ids;
    for (const auto& [label, rows] : groups) class_ids.push_back(label);
    std::map<int, std::size_t> class_index;
    for (std::size_t i = 0; i < class_ids.size(); ++i) class_index[class_ids[i]] = i;

    const std::size_t n = embeddings_train.rows();
    const std::size_t d = embeddings_train.cols();
    const std::size_t c = class_ids.size();

    // Full-batch gradient descent on the softmax cross-entropy.
    std::vector<double> w(c * d, 0.0), b(c, 0.0);
    std::vector<double> logits(c), probs(c);
    std::vector<double> gw(c * d), gb(c);
    const double lr = 0.1;
    const int steps = 2000;
    const double inv_n = 1.0 / static_cast<double>(n);

    for (int step = 0; step < steps; ++step) {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = embeddings_train.row(i);
            double mx = -1e300;
            for (std::size_t j = 0; j < c; ++j) {
                double acc = b[j];
                const double* wr = w.data() + j * d;
                for (std::size_t k = 0; k < d; ++k) acc += wr[k] * x[k];
                logits[j] = acc;
                mx = std::max(mx, acc);
            }
            double denom = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                probs[j] = std::exp(logits[j] - mx);
                denom += probs[j];
            }
            const auto truth = class_index.at(labels_train[i]);
            for (std::size_t j = 0; j < c; ++j) {
                const double g = (probs[j] / denom - (j == truth ? 1.0 : 0.0)) * inv_n;
                gb[j] += g;
                double* gwr = gw.data() + j * d;
                for (std::size_t k = 0; k < d; ++k) gwr[k] += g * x[k];
            }
        }
        for (std::size_t j = 0; j < c * d; ++j) w[j] -= lr * gw[j];
        for (std::size_t j = 0; j < c; ++j) b[j] -= lr * gb[j];
    }

    EvalReport report;
    report.protocol = "linear_eval";
    report.chance = 1.0 / static_cast<double>(c);

    std::map<int, std::pair<int, int>> per_class;
    int correct = 0;
    for (std::size_t i = 0; i < embeddings_test.rows(); ++i) {
        const double* x = embeddings_test.row(i);
        std::size_t best = 0;
        double best_logit = -1e300;
        for (std::size_t j = 0; j < c; ++j) {
            double acc = b[j];
            const double* wr = w.data() + j * d;
            for (std::size_t k = 0; k < d; ++k) acc += wr[k] * x[k];
            if (acc > best_logit) {
                best_logit = acc;
                best = j;
            }
        }
        const int truth = labels_test[i];
        auto& [c_correct, c_total] = per_class[truth];
        ++c_total;
        if (class_ids[best] == truth) {
            ++correct;
            ++c_correct;
        }
    }
    report.accuracy = labels_test.empty() ? 0.0
                                          : static_cast<double>(correct) /
                                                static_cast<double>(labels_test.size());
    for (const auto& [label, counts] : per_class) {
        report.per_class_accuracy.emplace_back(
            label, static_cast<double>(counts.first) / static_cast<double>(counts.second));
    }
    return report;
}

// ---------------------------------------------------------------------------

double batch_contrast_from_counts(const std::vector<double>& p_ab, const std::vector<double>& p_a,
                                  const std::vector<double>& p_b, const nn::Tensor& scores,
                                  nn::Tensor* dscore) {
    const std::size_t A = p_a.size(), B = p_b.size();
    double value = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
        if (p_a[a] == 0.0) continue;
        const double* srow = scores.row(a);
        double mx = -1e300;
        for (std::size_t b = 0; b < B; ++b) {
            if (p_b[b] > 0.0) mx = std::max(mx, srow[b]);
        }
        double denom = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            if (p_b[b] > 0.0) denom += p_b[b] * std::exp(srow[b] - mx);
        }
        const double lse = mx + std::log(denom);
        for (std::size_t b = 0; b < B; ++b) {
            const double pab = p_ab[a * B + b];
            if (pab > 0.0) value += pab * (srow[b] - lse);
            if (dscore && p_b[b] > 0.0) {
                dscore->at(a, b) =
                    (pab > 0.0 ? pab : 0.0) - p_a[a] * p_b[b] * std::exp(srow[b] - mx) / denom;
            }
        }
    }
    return value;
}

info::JointTable binary_symmetric_pair(double flip_prob) {
    if (flip_prob < 0.0 || flip_prob > 1.0) {
        throw std::invalid_argument("binary_symmetric_pair: flip_prob must lie in [0, 1]");
    }
    const double agree = (1.0 - flip_prob) / 2.0, flip = flip_prob / 2.0;
    return info::JointTable({{"A", 2}, {"B", 2}}, {agree, flip, flip, agree});
}

ConvergenceReport mi_convergence(const info::JointTable& pair_table,
                                 const std::vector<std::size_t>& n_grid, int repeats,
                                 const CriticSpec& critic, std::uint64_t seed) {
    if (pair_table.rank() != 2) {
        throw std::invalid_argument("mi_convergence: expected a two-axis pair table");
    }
    if (n_grid.empty() || repeats < 1) {
        throw std::invalid_argument("mi_convergence: empty n grid or no repeats");
    }
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
        if (n_grid[i] <= n_grid[i - 1]) {
            throw std::invalid_argument("mi_convergence: n grid must be strictly increasing");
        }
    }
    const std::vector<int> ax_a{0}, ax_b{1};
    const double true_mi = info::mutual_info(pair_table, ax_a, ax_b);
    const double ceiling = std::log(static_cast<double>(n_grid.front()));
    if (true_mi >= ceiling) {
        throw std::invalid_argument(
            "mi_convergence: true MI " + std::to_string(true_mi) +
            " is not below the batch-contrast ceiling ln(n_min) = " + std::to_string(ceiling));
    }

    const auto A = static_cast<std::size_t>(pair_table.axis_size(0));
    const auto B = static_cast<std::size_t>(pair_table.axis_size(1));
    const nn::EncoderSpec spec_a{A, critic.hidden, critic.emb_dim, false};
    const nn::EncoderSpec spec_b{B, critic.hidden, critic.emb_dim, false};

    // One-hot inputs: each distinct symbol is a row of the identity.
    nn::Tensor onehot_a = nn::Tensor::zeros({A, A});
    for (std::size_t i = 0; i < A; ++i) onehot_a.at(i, i) = 1.0;
    nn::Tensor onehot_b = nn::Tensor::zeros({B, B});
    for (std::size_t i = 0; i < B; ++i) onehot_b.at(i, i) = 1.0;

    ConvergenceReport report;
    report.true_mi = true_mi;
    report.critic_param_count =
        nn::init_params(spec_a, 0).scalar_count() + nn::init_params(spec_b, 0).scalar_count();

    struct Task {
        std::size_t n_index;
        int repeat;
    };
    std::vector<Task> tasks;
    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
        for (int rep = 0; rep < repeats; ++rep) tasks.push_back({ni, rep});
    }
    std::vector<double> estimates(tasks.size(), 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long ti = 0; ti < static_cast<long long>(tasks.size()); ++ti) {
        const auto [ni, rep] = tasks[static_cast<std::size_t>(ti)];
        const std::size_t n = n_grid[ni];
        Rng rng(substream_seed(seed, "mi_convergence",
                               ni * 1000 + static_cast<std::uint64_t>(rep)));

        // Empirical joint counts of n draws.
        std::vector<double> p_ab(A * B, 0.0), p_a(A, 0.0), p_b(B, 0.0);
        const auto& probs = pair_table.probs();
        for (std::size_t draw = 0; draw < n; ++draw) {
            double u = rng.uniform();
            std::size_t cell = 0;
            for (; cell + 1 < probs.size(); ++cell) {
                u -= probs[cell];
                if (u < 0.0) break;
            }
            p_ab[cell] += 1.0;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& v : p_ab) v *= inv_n;
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t b = 0; b < B; ++b) {
                p_a[a] += p_ab[a * B + b];
                p_b[b] += p_ab[a * B + b];
            }
        }

        auto params_a = nn::init_params(spec_a, rng.next_u64());
        auto params_b = nn::init_params(spec_b, rng.next_u64());
        nn::AdamOptimizer opt_a(critic.lr), opt_b(critic.lr);

        double value = 0.0;
        for (int step = 0; step < critic.train_steps; ++step) {
            nn::ForwardCache cache_a, cache_b;
            const auto fa = nn::forward(spec_a, params_a, onehot_a, &cache_a);
            const auto gb = nn::forward(spec_b, params_b, onehot_b, &cache_b);

            nn::Tensor scores = nn::Tensor::zeros({A, B});
            for (std::size_t a = 0; a < A; ++a) {
                for (std::size_t b = 0; b < B; ++b) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < critic.emb_dim; ++k) {
                        acc += fa.at(a, k) * gb.at(b, k);
                    }
                    scores.at(a, b) = acc;
                }
            }
            nn::Tensor dscore = nn::Tensor::zeros({A, B});
            value = batch_contrast_from_counts(p_ab, p_a, p_b, scores, &dscore);

            // Ascent: feed the negated upstream to the descent optimizers.
            nn::Tensor dfa = nn::Tensor::zeros({A, critic.emb_dim});
            nn::Tensor dgb = nn::Tensor::zeros({B, critic.emb_dim});
            for (std::size_t a = 0; a < A; ++a) {
                for (std::size_t b = 0; b < B; ++b) {
                    const double d = dscore.at(a, b);
                    if (d == 0.0) continue;
                    for (std::size_t k = 0; k < critic.emb_dim; ++k) {
                        dfa.at(a, k) -= d * gb.at(b, k);
                        dgb.at(b, k) -= d * fa.at(a, k);
                    }
                }
            }
            auto grads_a = nn::backward_from_cache(spec_a, params_a, cache_a, dfa);
            auto grads_b = nn::backward_from_cache(spec_b, params_b, cache_b, dgb);
            opt_a.step(params_a, grads_a.params);
            opt_b.step(params_b, grads_b.params);
        }
        estimates[static_cast<std::size_t>(ti)] = value;
    }

    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
        ConvergencePoint point;
        point.n = n_grid[ni];
        for (int rep = 0; rep < repeats; ++rep) {
            point.estimates.push_back(estimates[ni * static_cast<std::size_t>(repeats) +
                                                static_cast<std::size_t>(rep)]);
        }
        double mean = 0.0;
        for (double e : point.estimates) mean += std::abs(e - true_mi);
        mean /= static_cast<double>(repeats);
        double var = 0.0;
        for (double e : point.estimates) {
            const double d = std::abs(e - true_mi) - mean;
            var += d * d;
        }
        point.mean_abs_error = mean;
        point.std_dev = repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0;
        report.points.push_back(std::move(point));
    }

    // Least-squares slope of ln(mean error) against ln(n).
    const auto m = static_cast<double>(n_grid.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : report.points) {
        const double x = std::log(static_cast<double>(p.n));
        const double y = std::log(std::max(p.mean_abs_error, 1e-15));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    report.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return report;
}

nlohmann::ordered_json ConvergenceReport::to_json() const {
    nlohmann::ordered_json j;
    j["true_mi"] = true_mi;
    j["critic_param_count"] = critic_param_count;
    j["slope"] = slope;
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : points) {
        j["points"].push_back({{"n", p.n},
                               {"mean_abs_error", p.mean_abs_error},
                               {"std", p.std_dev},
                               {"estimates", p.estimates}});
    }
    return j;
}

std::string ConvergenceReport::to_csv() const {
    std::ostringstream out;
    out << "n,mean_error,std\n";
    char line[128];
    for (const auto& p : points) {
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", p.n, p.mean_abs_error, p.std_dev);
        out << line;
    }
    return out.str();
}

} // namespace mvinfo::eval
