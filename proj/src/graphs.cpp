#include "grmc/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "grmc/csv.hpp"
#include "grmc/errors.hpp"

namespace grmc {

namespace {
constexpr double kEarthRadiusKm = 6371.0;

double deg2rad(double d) { return d * M_PI / 180.0; }
}  // namespace

double haversine_distance(const StationMetadata& a, const StationMetadata& b) {
    const double phi1 = deg2rad(a.latitude), phi2 = deg2rad(b.latitude);
    const double dphi = phi2 - phi1;
    const double dlambda = deg2rad(b.longitude - a.longitude);
    const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlambda / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

WeightedGraph build_spatial_graph(const std::vector<StationMetadata>& meta,
                                  const SpatialGraphConfig& cfg) {
    const int n = static_cast<int>(meta.size());
    if (cfg.k < 1) throw ValidationError("spatial graph requires k >= 1");
    if (cfg.altitude_limit && cfg.altitude_threshold_m <= 0.0)
        throw ValidationError("altitude threshold must be positive");
    if (cfg.k >= n)
        throw ValidationError("k = " + std::to_string(cfg.k) +
                              " requires more than " + std::to_string(cfg.k) +
                              " stations, got " + std::to_string(n));

    Eigen::MatrixXd dist(n, n);
    for (int i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            const double d = haversine_distance(meta[static_cast<std::size_t>(i)],
                                                meta[static_cast<std::size_t>(j)]);
            if (d == 0.0 && cfg.weighted)
                throw ValidationError("stations '" +
                                      meta[static_cast<std::size_t>(i)].station_id +
                                      "' and '" +
                                      meta[static_cast<std::size_t>(j)].station_id +
                                      "' share coordinates; 1/distance weight "
                                      "is undefined");
            dist(i, j) = dist(j, i) = d;
        }
    }

    // Directed KNN over admissible candidates, then union symmetrisation.
    std::set<std::pair<int, int>> selected;
    std::vector<int> candidates;
    for (int i = 0; i < n; ++i) {
        candidates.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (cfg.altitude_limit &&
                std::abs(meta[static_cast<std::size_t>(i)].altitude_m -
                         meta[static_cast<std::size_t>(j)].altitude_m) >
                    cfg.altitude_threshold_m)
                continue;
            candidates.push_back(j);
        }
        const int take = std::min<int>(cfg.k, static_cast<int>(candidates.size()));
        std::partial_sort(candidates.begin(), candidates.begin() + take,
                          candidates.end(), [&](int a, int b) {
                              if (dist(i, a) != dist(i, b))
                                  return dist(i, a) < dist(i, b);
                              return a < b;  // deterministic tie-break
                          });
        for (int s = 0; s < take; ++s) {
            const int j = candidates[static_cast<std::size_t>(s)];
            selected.emplace(std::min(i, j), std::max(i, j));
        }
    }

    WeightedGraph g;
    g.n_nodes = n;
    g.edges.reserve(selected.size());
    for (const auto& [i, j] : selected)
        g.edges.push_back({i, j, cfg.weighted ? 1.0 / dist(i, j) : 1.0});
    return g;
}

WeightedGraph build_temporal_graph(int m, const LagSet& lagset) {
    if (lagset.lags.empty()) throw ValidationError("lag set must be nonempty");
    for (std::size_t s = 0; s < lagset.lags.size(); ++s) {
        if (lagset.lags[s] <= 0)
            throw ValidationError("lags must be positive");
        if (s > 0 && lagset.lags[s] <= lagset.lags[s - 1])
            throw ValidationError("lags must be strictly increasing");
    }
    const int max_lag = lagset.lags.back();
    if (max_lag >= m)
        throw ValidationError("max lag " + std::to_string(max_lag) +
                              " must be smaller than row count " +
                              std::to_string(m));

    WeightedGraph g;
    g.n_nodes = m;
    for (int t = 0; t < m; ++t) {
        for (int lag : lagset.lags) {
            if (t + lag >= m) break;
            const double w = lagset.weight_rule == LagSet::WeightRule::unit
                                 ? 1.0
                                 : 1.0 / static_cast<double>(lag);
            g.edges.push_back({t, t + lag, w});
        }
    }
    return g;
}

Eigen::SparseMatrix<double> laplacian(const WeightedGraph& g) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.edges.size() * 4);
    std::vector<double> degree(static_cast<std::size_t>(g.n_nodes), 0.0);
    for (const auto& e : g.edges) {
        trip.emplace_back(e.i, e.j, -e.weight);
        trip.emplace_back(e.j, e.i, -e.weight);
        degree[static_cast<std::size_t>(e.i)] += e.weight;
        degree[static_cast<std::size_t>(e.j)] += e.weight;
    }
    for (int i = 0; i < g.n_nodes; ++i)
        if (degree[static_cast<std::size_t>(i)] != 0.0)
            trip.emplace_back(i, i, degree[static_cast<std::size_t>(i)]);
    Eigen::SparseMatrix<double> L(g.n_nodes, g.n_nodes);
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
}

void write_graph_csv(const std::string& path, const WeightedGraph& g) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    f << "i,j,weight\n";
    for (const auto& e : g.edges)
        f << e.i << ',' << e.j << ',' << format_double(e.weight) << '\n';
}

}  // namespace grmc
