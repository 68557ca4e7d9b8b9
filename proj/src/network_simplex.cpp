#include "otflow/error.hpp"
#include "otflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

// Transportation simplex on a dense bipartite graph. The basis is a spanning
// tree over row nodes [0, ns) and column nodes [ns, ns + nt). Supplies are
// perturbed (rows +delta, last column +ns*delta) so that every basis met
// during pivoting is nondegenerate; the final tree is re-solved with the
// original supplies.

namespace otflow::transport {

namespace {

struct Tree {
    std::size_t ns, nt;
    std::vector<std::vector<std::size_t>> adj;  // node -> incident basic cells
    std::vector<long> parent;                   // node -> parent node (-1 at root)
    std::vector<std::size_t> parent_cell;
    std::vector<std::size_t> depth;
    std::vector<std::size_t> order;  // BFS order from the root

    std::size_t row_of(std::size_t cell) const { return cell / nt; }
    std::size_t col_node(std::size_t cell) const { return ns + cell % nt; }
    std::size_t other(std::size_t cell, std::size_t node) const {
        return node < ns ? col_node(cell) : row_of(cell);
    }

    void add(std::size_t cell) {
        adj[row_of(cell)].push_back(cell);
        adj[col_node(cell)].push_back(cell);
    }
    void remove(std::size_t cell) {
        for (std::size_t node : {row_of(cell), col_node(cell)}) {
            auto& v = adj[node];
            v.erase(std::find(v.begin(), v.end(), cell));
        }
    }
    // BFS from node 0; returns the number of reached nodes
    std::size_t traverse() {
        const std::size_t N = ns + nt;
        parent.assign(N, -2);
        parent_cell.assign(N, 0);
        depth.assign(N, 0);
        order.clear();
        order.push_back(0);
        parent[0] = -1;
        for (std::size_t head = 0; head < order.size(); ++head) {
            std::size_t v = order[head];
            for (std::size_t c : adj[v]) {
                std::size_t w = other(c, v);
                if (parent[w] != -2) continue;
                parent[w] = long(v);
                parent_cell[w] = c;
                depth[w] = depth[v] + 1;
                order.push_back(w);
            }
        }
        return order.size();
    }
};

}  // namespace

SimplexSolution network_simplex(const Eigen::MatrixXd& cost_full, const std::vector<double>& a_full,
                                const std::vector<double>& b_full) {
    const std::size_t n_rows = a_full.size(), n_cols = b_full.size();
    SimplexSolution out;
    out.gamma = Eigen::MatrixXd::Zero(Eigen::Index(n_rows), Eigen::Index(n_cols));
    out.u.assign(n_rows, 0.0);
    out.v.assign(n_cols, 0.0);
    out.row_used.assign(n_rows, 0);
    out.col_used.assign(n_cols, 0);

    std::vector<std::size_t> R, Cc;
    for (std::size_t i = 0; i < n_rows; ++i)
        if (a_full[i] > 0.0) R.push_back(i);
    for (std::size_t j = 0; j < n_cols; ++j)
        if (b_full[j] > 0.0) Cc.push_back(j);
    if (R.empty() || Cc.empty()) throw SolverFailure("transport", "empty marginal");
    for (auto i : R) out.row_used[i] = 1;
    for (auto j : Cc) out.col_used[j] = 1;

    const std::size_t ns = R.size(), nt = Cc.size(), N = ns + nt, ncell = ns * nt;
    std::vector<double> c(ncell), a(ns), b(nt);
    double cmax = 0.0;
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            c[i * nt + j] = cost_full(Eigen::Index(R[i]), Eigen::Index(Cc[j]));
            cmax = std::max(cmax, std::abs(c[i * nt + j]));
        }
    double total = 0.0;
    for (std::size_t i = 0; i < ns; ++i) total += (a[i] = a_full[R[i]]);
    for (std::size_t j = 0; j < nt; ++j) b[j] = b_full[Cc[j]];

    const double delta = 1e-13 * total;
    std::vector<double> ap(a), bp(b);
    for (auto& x : ap) x += delta;
    bp.back() += double(ns) * delta;

    // matrix-minimum starting basis
    std::vector<std::size_t> idx(ncell);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return c[x] < c[y]; });
    std::vector<double> flow(ncell, 0.0), ra(ap), rb(bp);
    std::vector<char> row_done(ns, 0), col_done(nt, 0), basic(ncell, 0);
    Tree tree{ns, nt, std::vector<std::vector<std::size_t>>(N), {}, {}, {}, {}};
    std::size_t placed = 0;
    const double eps_mass = 1e-14 * total;
    for (std::size_t cell : idx) {
        std::size_t i = cell / nt, j = cell % nt;
        if (row_done[i] || col_done[j]) continue;
        double x = std::min(ra[i], rb[j]);
        flow[cell] = x;
        basic[cell] = 1;
        tree.add(cell);
        ++placed;
        ra[i] -= x;
        rb[j] -= x;
        if (ra[i] <= eps_mass) row_done[i] = 1;
        if (rb[j] <= eps_mass) col_done[j] = 1;
        if (placed == N - 1) break;
    }
    // connect a degenerate start into a spanning tree with zero-flow cells
    if (tree.traverse() < N) {
        std::vector<std::size_t> comp(N);
        std::iota(comp.begin(), comp.end(), std::size_t(0));
        auto find = [&](std::size_t x) {
            while (comp[x] != x) x = comp[x] = comp[comp[x]];
            return x;
        };
        for (std::size_t cell = 0; cell < ncell; ++cell)
            if (basic[cell]) comp[find(cell / nt)] = find(ns + cell % nt);
        for (std::size_t cell : idx) {
            std::size_t r = find(cell / nt), s = find(ns + cell % nt);
            if (r == s) continue;
            comp[r] = s;
            basic[cell] = 1;
            tree.add(cell);
        }
        tree.traverse();
    }

    std::vector<double> u(ns), v(nt);
    auto potentials = [&] {
        for (std::size_t node : tree.order) {
            if (tree.parent[node] < 0) {
                u[node] = 0.0;
                continue;
            }
            std::size_t cell = tree.parent_cell[node];
            if (node < ns)
                u[node] = c[cell] - v[cell % nt];
            else
                v[node - ns] = c[cell] - u[cell / nt];
        }
    };
    potentials();

    const double tol_rc = 1e-12 * std::max(cmax, 1e-300);
    const std::size_t block = std::max<std::size_t>(std::size_t(std::sqrt(double(ncell))), 16);
    std::size_t cursor = 0, pivots = 0;
    const std::size_t max_pivots = 50 * ncell + 1000;
    std::vector<std::size_t> side_a, side_b;
    while (true) {
        // block search for the most negative reduced cost
        std::size_t scanned = 0, best_cell = ncell;
        double best = -tol_rc;
        while (scanned < ncell) {
            std::size_t stop = std::min(ncell - scanned, block);
            for (std::size_t s = 0; s < stop; ++s) {
                std::size_t cell = cursor;
                cursor = cursor + 1 == ncell ? 0 : cursor + 1;
                if (basic[cell]) continue;
                double rc = c[cell] - u[cell / nt] - v[cell % nt];
                if (rc < best) {
                    best = rc;
                    best_cell = cell;
                }
            }
            scanned += stop;
            if (best_cell != ncell) break;
        }
        if (best_cell == ncell) break;
        if (++pivots > max_pivots) throw SolverFailure("transport", "network simplex exceeded pivot limit");

        // cycle: entering cell (+), then the tree path from its column to its row
        std::size_t x = tree.col_node(best_cell), y = tree.row_of(best_cell);
        side_a.clear();
        side_b.clear();
        while (x != y) {
            if (tree.depth[x] >= tree.depth[y]) {
                side_a.push_back(tree.parent_cell[x]);
                x = std::size_t(tree.parent[x]);
            } else {
                side_b.push_back(tree.parent_cell[y]);
                y = std::size_t(tree.parent[y]);
            }
        }
        side_a.insert(side_a.end(), side_b.rbegin(), side_b.rend());
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = ncell;
        for (std::size_t k = 0; k < side_a.size(); k += 2)
            if (flow[side_a[k]] < theta) {
                theta = flow[side_a[k]];
                leave = side_a[k];
            }
        for (std::size_t k = 0; k < side_a.size(); ++k) flow[side_a[k]] += (k % 2 == 0) ? -theta : theta;
        flow[best_cell] = theta;
        flow[leave] = 0.0;
        basic[leave] = 0;
        basic[best_cell] = 1;
        tree.remove(leave);
        tree.add(best_cell);
        tree.traverse();
        potentials();
    }

    // exact flows of the final tree for the unperturbed supplies
    std::vector<double> sub(N, 0.0);
    for (std::size_t i = 0; i < ns; ++i) sub[i] = a[i];
    for (std::size_t j = 0; j < nt; ++j) sub[ns + j] = -b[j];
    std::fill(flow.begin(), flow.end(), 0.0);
    for (std::size_t k = tree.order.size(); k-- > 1;) {
        std::size_t node = tree.order[k];
        std::size_t cell = tree.parent_cell[node];
        flow[cell] = node < ns ? sub[node] : -sub[node];
        sub[std::size_t(tree.parent[node])] += sub[node];
    }
    for (std::size_t cell = 0; cell < ncell; ++cell)
        if (basic[cell] && flow[cell] > 0.0)
            out.gamma(Eigen::Index(R[cell / nt]), Eigen::Index(Cc[cell % nt])) = flow[cell];
    for (std::size_t i = 0; i < ns; ++i) out.u[R[i]] = u[i];
    for (std::size_t j = 0; j < nt; ++j) out.v[Cc[j]] = v[j];
    out.pivots = pivots;
    return out;
}

}  // namespace otflow::transport
