#include "matching.hpp"

#include <limits>

namespace kserver {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Jonker-Volgenant style shortest augmenting paths with dual potentials.
// rows <= cols; returns row -> col.
std::vector<int> hungarian(const std::vector<std::vector<double>>& a) {
    const int n = static_cast<int>(a.size());
    const int m = n ? static_cast<int>(a[0].size()) : 0;
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> col_row(m + 1, n);  // row matched to each col; n = unmatched
    std::vector<int> way(m + 1, m);

    for (int i = 0; i < n; ++i) {
        col_row[m] = i;  // virtual column holds the row being inserted
        int j0 = m;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            int i0 = col_row[j0], j1 = -1;
            double delta = kInf;
            for (int j = 0; j < m; ++j) {
                if (used[j]) continue;
                double cur = a[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (col_row[j0] != n);
        // augment along the alternating path
        do {
            int j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
        } while (j0 != m);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 0; j < m; ++j)
        if (col_row[j] != n) row_to_col[col_row[j]] = j;
    return row_to_col;
}

void check_shape(const std::vector<std::vector<double>>& cost) {
    const size_t n = cost.size();
    if (n == 0) return;
    const size_t m = cost[0].size();
    if (n > m) throw Error("assignment needs at least as many columns as rows");
    for (const auto& row : cost)
        if (row.size() != m) throw Error("assignment cost matrix is ragged");
}

double row_order_sum(const std::vector<std::vector<double>>& cost, const std::vector<int>& match) {
    double total = 0.0;
    for (size_t i = 0; i < match.size(); ++i) total += cost[i][match[i]];
    return total;
}

}  // namespace

AssignmentResult min_cost_assignment(const std::vector<std::vector<double>>& cost) {
    check_shape(cost);
    AssignmentResult r;
    r.row_to_col = hungarian(cost);
    r.cost = row_order_sum(cost, r.row_to_col);
    return r;
}

double assignment_value(const std::vector<std::vector<double>>& cost) {
    return min_cost_assignment(cost).cost;
}

AssignmentResult min_cost_assignment_lex(const std::vector<std::vector<double>>& cost) {
    check_shape(cost);
    const int n = static_cast<int>(cost.size());
    const int m = n ? static_cast<int>(cost[0].size()) : 0;

    AssignmentResult r;
    r.row_to_col.assign(n, -1);
    std::vector<char> used(m, 0);

    for (int i = 0; i < n; ++i) {
        int best_col = -1;
        double best_total = kInf;
        for (int c = 0; c < m; ++c) {
            if (used[c]) continue;
            // completion of rows i+1.. over the remaining columns
            std::vector<int> free_cols;
            for (int j = 0; j < m; ++j)
                if (!used[j] && j != c) free_cols.push_back(j);
            std::vector<std::vector<double>> sub(n - i - 1);
            for (int t = i + 1; t < n; ++t) {
                auto& row = sub[t - i - 1];
                row.reserve(free_cols.size());
                for (int j : free_cols) row.push_back(cost[t][j]);
            }
            std::vector<int> sub_match = hungarian(sub);
            // recompute the full total as one left-to-right row sum so that
            // equal totals compare exactly like the enumeration oracle
            double total = 0.0;
            for (int t = 0; t < i; ++t) total += cost[t][r.row_to_col[t]];
            total += cost[i][c];
            for (int t = i + 1; t < n; ++t) total += cost[t][free_cols[sub_match[t - i - 1]]];
            if (total < best_total) {
                best_total = total;
                best_col = c;
            }
        }
        r.row_to_col[i] = best_col;
        used[best_col] = 1;
    }
    r.cost = row_order_sum(cost, r.row_to_col);
    return r;
}

}  // namespace kserver
