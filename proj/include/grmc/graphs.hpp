#ifndef GRMC_GRAPHS_HPP
#define GRMC_GRAPHS_HPP

#include <Eigen/SparseCore>
#include <string>
#include <vector>

#include "grmc/data_model.hpp"

namespace grmc {

/// Undirected weighted graph stored as an edge list with i < j.
/// Builders guarantee positive weights, no self-loops, no duplicates,
/// and edges sorted by (i, j).
struct WeightedGraph {
    int n_nodes = 0;
    struct Edge {
        int i, j;
        double weight;
    };
    std::vector<Edge> edges;

    static WeightedGraph empty(int n) { return WeightedGraph{n, {}}; }
};

/// Repeating temporal dependency pattern: lag l connects rows t and t+l.
struct LagSet {
    enum class WeightRule { unit, inverse_lag };
    std::vector<int> lags;  // strictly increasing, positive
    WeightRule weight_rule = WeightRule::unit;
};

struct SpatialGraphConfig {
    int k = 3;
    bool weighted = true;
    bool altitude_limit = false;
    double altitude_threshold_m = 100.0;
};

/// Great-circle distance in km on a sphere of radius 6371.0 km.
double haversine_distance(const StationMetadata& a, const StationMetadata& b);

/// K-nearest-neighbour spatial graph over stations.
///
/// Each station selects its k nearest neighbours by haversine distance (ties
/// broken by lower station index); the directed relation is symmetrised by
/// union. With altitude_limit, pairs whose altitude difference exceeds the
/// threshold are removed from the candidate set before selection, so each
/// station still seeks k admissible neighbours and may end up isolated.
/// Weights are 1/distance_km when cfg.weighted, else 1.
WeightedGraph build_spatial_graph(const std::vector<StationMetadata>& meta,
                                  const SpatialGraphConfig& cfg);

/// Temporal chain graph: for each lag l and each row t with t + l < m,
/// the edge (t, t+l) with weight 1 or 1/l per the weight rule.
WeightedGraph build_temporal_graph(int m, const LagSet& lagset);

/// Graph Laplacian L = D - W (sparse, symmetric positive semidefinite).
Eigen::SparseMatrix<double> laplacian(const WeightedGraph& g);

/// Edge-list export: `i,j,weight` with 0-based node indices.
void write_graph_csv(const std::string& path, const WeightedGraph& g);

}  // namespace grmc

#endif
