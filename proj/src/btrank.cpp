#include "autopersuade/btrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "autopersuade/errors.hpp"
#include "autopersuade/io_util.hpp"
#include "autopersuade/rng.hpp"

namespace autopersuade {

double BTScores::at(const std::string& id) const {
    auto it = scores.find(id);
    if (it == scores.end()) {
        throw ValidationError("no strength score for document '" + id + "'");
    }
    return it->second;
}

namespace {

struct Dsu {
    std::vector<int> parent;
    explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

struct Edge {
    int j;
    double wins;    // times i beat j
    double losses;  // times j beat i
};

// Shared state for the MM solver. Items are indexed by sorted id; `free_item`
// marks the coordinates updated by sweeps (anchors stay constant).
struct Problem {
    std::vector<std::string> ids;
    std::unordered_map<std::string, int> index;
    std::vector<std::vector<Edge>> edges;
    std::vector<std::pair<int, int>> outcomes;  // (winner, loser) per record
    std::vector<bool> free_item;
    std::vector<bool> regularized;  // all-wins / all-losses items
    double virtual_strength = 1.0;

    int add_or_get(const std::string& id) {
        auto it = index.find(id);
        if (it != index.end()) return it->second;
        throw ValidationError("comparison references unexpected document id '" + id + "'");
    }
};

Problem build_problem(const ComparisonSet& comparisons, const std::vector<std::string>& ids) {
    Problem p;
    p.ids = ids;
    for (std::size_t i = 0; i < ids.size(); ++i) p.index[ids[i]] = static_cast<int>(i);

    const int n = static_cast<int>(ids.size());
    std::vector<std::map<int, std::pair<double, double>>> adj(n);  // j -> (wins over j, losses to j)
    for (const auto& r : comparisons.records) {
        const int w = p.add_or_get(r.winner_id());
        const int l = p.add_or_get(r.loser_id());
        p.outcomes.emplace_back(w, l);
        adj[w][l].first += 1.0;
        adj[l][w].second += 1.0;
    }
    p.edges.resize(n);
    for (int i = 0; i < n; ++i) {
        for (const auto& [j, counts] : adj[i]) {
            p.edges[i].push_back({j, counts.first, counts.second});
        }
    }
    p.free_item.assign(n, true);
    p.regularized.assign(n, false);
    return p;
}

std::string describe_components(const Problem& p, Dsu& dsu) {
    std::map<int, std::vector<std::string>> comps;
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
        comps[dsu.find(static_cast<int>(i))].push_back(p.ids[i]);
    }
    std::ostringstream out;
    bool first = true;
    for (const auto& [root, members] : comps) {
        if (!first) out << " | ";
        first = false;
        for (std::size_t k = 0; k < members.size() && k < 8; ++k) {
            if (k) out << ", ";
            out << members[k];
        }
        if (members.size() > 8) out << " (+" << members.size() - 8 << " more)";
    }
    return out.str();
}

// Tag items whose record set is one-sided; the MM update for them diverges
// without the virtual half-win/half-loss opponent.
void flag_one_sided(Problem& p, std::vector<std::string>* warnings) {
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
        if (!p.free_item[i]) continue;
        double wins = 0.0, losses = 0.0;
        for (const auto& e : p.edges[i]) {
            wins += e.wins;
            losses += e.losses;
        }
        if (wins + losses == 0.0) continue;  // caught earlier as zero-comparison document
        if (losses == 0.0 || wins == 0.0) {
            p.regularized[i] = true;
            if (warnings) {
                warnings->push_back("document '" + p.ids[i] + "' has " +
                                    (losses == 0.0 ? std::string("only wins") : std::string("only losses")) +
                                    "; adding a half-win and half-loss against a virtual opponent of strength " +
                                    io::format_double(p.virtual_strength));
            }
        }
    }
}

double objective(const Problem& p, const std::vector<double>& pi) {
    double ll = 0.0;
    for (const auto& [w, l] : p.outcomes) {
        ll += std::log(pi[w] / (pi[w] + pi[l]));
    }
    const double pv = p.virtual_strength;
    for (std::size_t i = 0; i < pi.size(); ++i) {
        if (!p.regularized[i]) continue;
        const double denom = pi[i] + pv;
        ll += 0.5 * std::log(pi[i] / denom) + 0.5 * std::log(pv / denom);
    }
    return ll;
}

// Cyclic (Gauss-Seidel) minorization-maximization sweeps. Coordinates are
// updated in sorted-id order using the freshest values; a synchronous update
// oscillates on two-item instances, the cyclic form is monotone.
BtFitResult run_mm(Problem& p, std::vector<double> pi, const BtOptions& options,
                   std::vector<std::string> warnings) {
    if (options.max_iters < 1) throw ValidationError("max_iters must be >= 1");
    if (!(options.tol > 0.0)) throw ValidationError("tol must be positive");

    BtFitResult result;
    result.warnings = std::move(warnings);
    const double pv = p.virtual_strength;

    double prev_ll = objective(p, pi);
    for (int sweep = 0; sweep < options.max_iters; ++sweep) {
        double max_rel_change = 0.0;
        for (std::size_t i = 0; i < pi.size(); ++i) {
            if (!p.free_item[i]) continue;
            double num = 0.0, den = 0.0;
            for (const auto& e : p.edges[i]) {
                const double denom = pi[i] + pi[e.j];
                num += e.wins * pi[e.j] / denom;
                den += e.losses / denom;
            }
            if (p.regularized[i]) {
                const double denom = pi[i] + pv;
                num += 0.5 * pv / denom;
                den += 0.5 / denom;
            }
            const double updated = num / den;
            max_rel_change = std::max(max_rel_change, std::abs(updated - pi[i]) / pi[i]);
            pi[i] = updated;
        }
        const double ll = objective(p, pi);
        // relative slack: summation roundoff scales with the objective's magnitude
        if (ll < prev_ll - 1e-12 * std::max(1.0, std::abs(prev_ll))) {
            throw NumericalError("strength update decreased the objective at sweep " +
                                 std::to_string(sweep) + " (" + io::format_double(prev_ll) + " -> " +
                                 io::format_double(ll) + ")");
        }
        prev_ll = ll;
        result.ll_trace.push_back(ll);
        result.n_sweeps = sweep + 1;
        if (max_rel_change < options.tol) {
            result.converged = true;
            break;
        }
    }

    for (std::size_t i = 0; i < pi.size(); ++i) {
        result.scores.scores[p.ids[i]] = pi[i];
    }
    return result;
}

}  // namespace

BtFitResult fit_bt(const ComparisonSet& comparisons, const BtOptions& options) {
    return fit_bt(comparisons, comparisons.ids(), options);
}

BtFitResult fit_bt(const ComparisonSet& comparisons, const std::vector<std::string>& expected_ids,
                   const BtOptions& options) {
    if (comparisons.records.empty()) throw ValidationError("no comparisons to fit");
    std::vector<std::string> ids = expected_ids;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) throw ValidationError("no documents to score");

    Problem p = build_problem(comparisons, ids);

    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (p.edges[i].empty()) {
            throw ValidationError("document '" + ids[i] + "' has zero comparisons");
        }
    }

    Dsu dsu(static_cast<int>(ids.size()));
    for (const auto& [w, l] : p.outcomes) dsu.unite(w, l);
    std::set<int> roots;
    for (std::size_t i = 0; i < ids.size(); ++i) roots.insert(dsu.find(static_cast<int>(i)));
    if (roots.size() > 1) {
        throw ValidationError("comparison graph is disconnected; components: " +
                              describe_components(p, dsu));
    }

    std::vector<std::string> warnings;
    p.virtual_strength = 1.0;
    flag_one_sided(p, &warnings);

    std::vector<double> pi(ids.size(), 1.0);
    BtFitResult result = run_mm(p, std::move(pi), options, std::move(warnings));

    // Present scores on the mean-one scale.
    double sum = 0.0;
    for (const auto& [id, s] : result.scores.scores) sum += s;
    const double rescale = static_cast<double>(result.scores.scores.size()) / sum;
    for (auto& [id, s] : result.scores.scores) s *= rescale;
    result.scores.anchored = false;
    return result;
}

BtFitResult fit_bt_fixed(const ComparisonSet& comparisons, const BTScores& fixed,
                         const std::vector<std::string>& new_ids, const BtOptions& options) {
    std::vector<std::string> free_ids = new_ids;
    std::sort(free_ids.begin(), free_ids.end());
    free_ids.erase(std::unique(free_ids.begin(), free_ids.end()), free_ids.end());

    if (free_ids.empty()) {
        BtFitResult result;
        result.scores = fixed;
        result.scores.anchored = true;
        result.converged = true;
        return result;
    }
    if (fixed.scores.empty()) {
        throw ValidationError("cannot anchor new documents: no fixed scores supplied");
    }
    for (const auto& id : free_ids) {
        if (fixed.scores.count(id)) {
            throw ValidationError("document '" + id + "' is listed as new but already has a fixed score");
        }
    }

    std::vector<std::string> all_ids = free_ids;
    for (const auto& [id, s] : fixed.scores) all_ids.push_back(id);
    std::sort(all_ids.begin(), all_ids.end());

    Problem p = build_problem(comparisons, all_ids);
    for (const auto& [id, s] : fixed.scores) p.free_item[p.index.at(id)] = false;

    for (const auto& id : free_ids) {
        if (p.edges[p.index.at(id)].empty()) {
            throw ValidationError("new document '" + id + "' has no comparisons");
        }
    }

    // Every free item must reach an anchor through the comparison graph.
    Dsu dsu(static_cast<int>(all_ids.size()));
    int ground = -1;
    for (const auto& [id, s] : fixed.scores) {
        const int i = p.index.at(id);
        if (ground < 0) {
            ground = i;
        } else {
            dsu.unite(ground, i);
        }
    }
    for (const auto& [w, l] : p.outcomes) dsu.unite(w, l);
    std::vector<std::string> unreachable;
    for (const auto& id : free_ids) {
        if (dsu.find(p.index.at(id)) != dsu.find(ground)) unreachable.push_back(id);
    }
    if (!unreachable.empty()) {
        std::ostringstream msg;
        msg << "new documents not connected to any anchored document:";
        for (const auto& id : unreachable) msg << " " << id;
        throw ValidationError(msg.str());
    }

    double anchor_mean = 0.0;
    for (const auto& [id, s] : fixed.scores) anchor_mean += s;
    anchor_mean /= static_cast<double>(fixed.scores.size());
    p.virtual_strength = anchor_mean;

    std::vector<std::string> warnings;
    flag_one_sided(p, &warnings);

    std::vector<double> pi(all_ids.size(), anchor_mean);
    for (const auto& [id, s] : fixed.scores) {
        if (!(s > 0.0)) throw ValidationError("fixed score for '" + id + "' must be positive");
        pi[p.index.at(id)] = s;
    }

    BtFitResult result = run_mm(p, std::move(pi), options, std::move(warnings));
    for (const auto& [id, s] : fixed.scores) result.scores.scores[id] = s;  // bit-identical anchors
    result.scores.anchored = true;
    return result;
}

double log_likelihood(const BTScores& scores, const ComparisonSet& comparisons) {
    double ll = 0.0;
    for (const auto& r : comparisons.records) {
        const double w = scores.at(r.winner_id());
        const double l = scores.at(r.loser_id());
        ll += std::log(w / (w + l));
    }
    return ll;
}

namespace {

double quantile_type7(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = static_cast<double>(n - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

WinRateSummary win_rate_summary(const ComparisonSet& comparisons,
                                const std::map<std::string, std::string>& group_of, int n_boot,
                                std::uint64_t seed) {
    if (n_boot < 1) throw ValidationError("n_boot must be >= 1");

    auto label = [&](const std::string& id) -> const std::string& {
        auto it = group_of.find(id);
        if (it == group_of.end()) {
            throw ValidationError("document '" + id + "' has no group label");
        }
        return it->second;
    };

    std::set<std::string> present;
    std::map<std::string, std::vector<double>> outcomes;  // 1.0 = this group's side won
    for (const auto& r : comparisons.records) {
        const std::string& gl = label(r.left_id);
        const std::string& gr = label(r.right_id);
        present.insert(gl);
        present.insert(gr);
        if (gl == gr) continue;
        outcomes[gl].push_back(r.winner == Winner::left ? 1.0 : 0.0);
        outcomes[gr].push_back(r.winner == Winner::right ? 1.0 : 0.0);
    }
    for (const auto& g : present) {
        if (outcomes.find(g) == outcomes.end()) {
            throw ValidationError("group '" + g + "' has no cross-group comparisons");
        }
    }

    WinRateSummary summary;
    for (const auto& [g, wins] : outcomes) {
        const std::size_t n = wins.size();
        GroupWinRate rate;
        rate.n_comparisons = static_cast<int>(n);
        rate.win_rate = 100.0 * std::accumulate(wins.begin(), wins.end(), 0.0) / static_cast<double>(n);

        Rng rng(derive_seed(seed, "winrate:" + g));
        std::vector<double> boot(static_cast<std::size_t>(n_boot));
        for (auto& b : boot) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += wins[rng.uniform_index(n)];
            b = 100.0 * s / static_cast<double>(n);
        }
        std::sort(boot.begin(), boot.end());
        rate.ci_low = quantile_type7(boot, 0.025);
        rate.ci_high = quantile_type7(boot, 0.975);
        summary.groups[g] = rate;
    }
    return summary;
}

std::string scores_to_csv(const BTScores& scores) {
    std::ostringstream out;
    out << "id,score\n";
    for (const auto& [id, s] : scores.scores) {
        out << id << ',' << io::format_double(s) << '\n';
    }
    return out.str();
}

std::string win_rates_to_csv(const WinRateSummary& summary) {
    std::ostringstream out;
    out << "group,win_rate,ci_low,ci_high,n\n";
    for (const auto& [g, r] : summary.groups) {
        out << g << ',' << io::format_double(r.win_rate) << ',' << io::format_double(r.ci_low) << ','
            << io::format_double(r.ci_high) << ',' << r.n_comparisons << '\n';
    }
    return out.str();
}

}  // namespace autopersuade
