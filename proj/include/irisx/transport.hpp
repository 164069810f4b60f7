#pragma once

// Transportation simplex for the balanced min-cost transport problem.
// Deterministic pivoting: northwest-corner start, Dantzig entering rule with
// row-major tie break, leaving cell is the first minimum-flow donor along the
// cycle. Degenerate (zero-flow) basis cells are kept so the basis always has
// m+n-1 cells forming a spanning tree.

#include <cmath>
#include <cstddef>
#include <vector>

namespace irisx {

struct TransportFlow {
    int from = 0;
    int to = 0;
    double amount = 0;
};

struct TransportSolution {
    bool converged = false;
    double cost = 0;
    std::vector<TransportFlow> flows;
    int iterations = 0;
};

inline TransportSolution solve_transportation(const std::vector<double>& supplies,
                                              const std::vector<double>& demands,
                                              const std::vector<double>& costs,
                                              int max_iterations = 0) {
    TransportSolution sol;
    const int m = static_cast<int>(supplies.size());
    const int n = static_cast<int>(demands.size());
    if (m == 0 || n == 0) return sol;

    double total_s = 0, total_d = 0;
    for (double s : supplies) {
        if (!(s >= 0) || !std::isfinite(s)) return sol;
        total_s += s;
    }
    for (double d : demands) {
        if (!(d >= 0) || !std::isfinite(d)) return sol;
        total_d += d;
    }
    const double scale = std::max({total_s, total_d, 1.0});
    if (std::abs(total_s - total_d) > 1e-9 * scale) return sol;
    if (max_iterations <= 0) max_iterations = 1000 + 50 * (m + n);

    struct Cell {
        int i, j;
        double flow;
    };
    std::vector<Cell> basis;
    basis.reserve(static_cast<std::size_t>(m) + n - 1);

    {
        std::vector<double> s = supplies, d = demands;
        int i = 0, j = 0;
        while (true) {
            const double q = std::min(s[i], d[j]);
            basis.push_back({i, j, q});
            s[i] -= q;
            d[j] -= q;
            if (i == m - 1 && j == n - 1) break;
            if (s[i] <= 1e-12 * scale && i < m - 1) ++i;
            else if (j < n - 1) ++j;
            else ++i;
        }
    }

    const auto cost_at = [&](int i, int j) { return costs[static_cast<std::size_t>(i) * n + j]; };
    // node ids: rows 0..m-1, cols m..m+n-1
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(m) + n);  // basis cell indices
    std::vector<double> u(m), v(n);
    std::vector<char> u_set(m), v_set(n);
    std::vector<int> parent_edge(static_cast<std::size_t>(m) + n);
    std::vector<int> parent_node(static_cast<std::size_t>(m) + n);
    std::vector<char> in_basis;
    std::vector<int> queue;

    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        for (auto& a : adj) a.clear();
        for (int e = 0; e < static_cast<int>(basis.size()); ++e) {
            adj[basis[e].i].push_back(e);
            adj[static_cast<std::size_t>(m) + basis[e].j].push_back(e);
        }

        // Duals u_i + v_j = c_ij on basis cells, rooted at u_0 = 0.
        std::fill(u_set.begin(), u_set.end(), 0);
        std::fill(v_set.begin(), v_set.end(), 0);
        u[0] = 0;
        u_set[0] = 1;
        queue.clear();
        queue.push_back(0);
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const int node = queue[qi];
            for (int e : adj[node]) {
                const Cell& cell = basis[e];
                if (node < m) {
                    if (!v_set[cell.j]) {
                        v[cell.j] = cost_at(cell.i, cell.j) - u[cell.i];
                        v_set[cell.j] = 1;
                        queue.push_back(m + cell.j);
                    }
                } else {
                    if (!u_set[cell.i]) {
                        u[cell.i] = cost_at(cell.i, cell.j) - v[cell.j];
                        u_set[cell.i] = 1;
                        queue.push_back(cell.i);
                    }
                }
            }
        }
        if (queue.size() != static_cast<std::size_t>(m) + n) return sol;  // basis not a spanning tree

        int enter_i = -1, enter_j = -1;
        double best_reduced = -1e-10;
        in_basis.assign(static_cast<std::size_t>(m) * n, 0);
        for (const Cell& cell : basis)
            in_basis[static_cast<std::size_t>(cell.i) * n + cell.j] = 1;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                if (in_basis[static_cast<std::size_t>(i) * n + j]) continue;
                const double r = cost_at(i, j) - u[i] - v[j];
                if (r < best_reduced) {
                    best_reduced = r;
                    enter_i = i;
                    enter_j = j;
                }
            }
        }
        if (enter_i < 0) break;  // optimal

        // Path in the basis tree from row enter_i to col enter_j.
        std::fill(parent_edge.begin(), parent_edge.end(), -1);
        std::fill(parent_node.begin(), parent_node.end(), -1);
        queue.clear();
        queue.push_back(enter_i);
        parent_node[enter_i] = enter_i;
        const int target = m + enter_j;
        for (std::size_t qi = 0; qi < queue.size() && parent_node[target] < 0; ++qi) {
            const int node = queue[qi];
            for (int e : adj[node]) {
                const Cell& cell = basis[e];
                const int other = (node < m) ? m + cell.j : cell.i;
                if (parent_node[other] >= 0) continue;
                parent_node[other] = node;
                parent_edge[other] = e;
                queue.push_back(other);
            }
        }
        if (parent_node[target] < 0) return sol;  // disconnected basis

        // Cycle cells: entering first, then path edges walked back from the
        // target column; signs alternate starting + at the entering cell.
        std::vector<int> cycle_edges;
        for (int node = target; node != enter_i; node = parent_node[node])
            cycle_edges.push_back(parent_edge[node]);

        double theta = -1;
        int leave_pos = -1;
        for (std::size_t p = 0; p < cycle_edges.size(); p += 2) {  // donors: odd cycle positions
            const double f = basis[cycle_edges[p]].flow;
            if (theta < 0 || f < theta) {
                theta = f;
                leave_pos = static_cast<int>(p);
            }
        }

        for (std::size_t p = 0; p < cycle_edges.size(); ++p) {
            if (p % 2 == 0) basis[cycle_edges[p]].flow -= theta;
            else basis[cycle_edges[p]].flow += theta;
        }
        const int leave_edge = cycle_edges[leave_pos];
        basis[leave_edge] = {enter_i, enter_j, theta};
    }
    if (iter >= max_iterations) return sol;

    sol.converged = true;
    sol.iterations = iter;
    for (const Cell& cell : basis) {
        const double f = std::max(cell.flow, 0.0);
        sol.cost += f * cost_at(cell.i, cell.j);
        sol.flows.push_back({cell.i, cell.j, f});
    }
    return sol;
}

}  // namespace irisx
