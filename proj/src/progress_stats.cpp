#include "lltk/progress_stats.hpp"

#include "lltk/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace lltk::pstats {

namespace {

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Lentz's continued fraction for I_x(a, b); converges fast for
// x < (a + 1) / (a + b + 2), which the caller guarantees via the symmetry
// I_x(a, b) = 1 - I_{1-x}(b, a).
double beta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 400; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps)
            return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

bool rank_variance_guard(std::span<const double> v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] != v[0])
            return true;
    return false;
}

// Average ranks, ties shared.
std::vector<double> ranks_of(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
            ++j;
        const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[idx[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return sxy / std::sqrt(sxx * syy);
}

std::uint64_t factorial(std::size_t n) {
    std::uint64_t f = 1;
    for (std::size_t i = 2; i <= n; ++i)
        f *= i;
    return f;
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("incomplete beta requires positive shape parameters");
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    const double front =
        std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (df <= 0.0)
        throw std::invalid_argument("t-test degrees of freedom must be positive");
    if (std::isinf(t))
        return 0.0;
    const double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

double f_upper_tail_p(double f, double d1, double d2) {
    if (d1 <= 0.0 || d2 <= 0.0)
        throw std::invalid_argument("F degrees of freedom must be positive");
    if (f <= 0.0)
        return 1.0;
    if (std::isinf(f))
        return 0.0;
    return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

std::string stars_for_p(double p) {
    if (p > 0.05)
        return "ns";
    if (p > 0.01)
        return "*";
    if (p > 0.001)
        return "**";
    if (p > 0.0001)
        return "***";
    return "****";
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("correlation inputs differ in length");
    const std::size_t n = x.size();
    if (n < 3)
        throw std::invalid_argument("correlation needs at least 3 points");
    if (!rank_variance_guard(x) || !rank_variance_guard(y))
        throw std::invalid_argument("correlation undefined for a constant series");

    const std::vector<double> rx = ranks_of(x);
    const std::vector<double> ry = ranks_of(y);
    CorrelationResult res;
    res.n = n;
    res.r = pearson(rx, ry);

    if (n <= 8) {
        // Exact two-sided permutation test over all n! orderings of y.
        res.exact_p = true;
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<double> shuffled(n);
        const double threshold = std::fabs(res.r) - 1e-12;
        std::uint64_t at_least = 0;
        do {
            for (std::size_t i = 0; i < n; ++i)
                shuffled[i] = ry[perm[i]];
            if (std::fabs(pearson(rx, shuffled)) >= threshold)
                ++at_least;
        } while (std::next_permutation(perm.begin(), perm.end()));
        res.p = static_cast<double>(at_least) / static_cast<double>(factorial(n));
    } else {
        res.exact_p = false;
        const double r2 = res.r * res.r;
        if (r2 >= 1.0) {
            res.p = 0.0;
        } else {
            const double t =
                res.r * std::sqrt(static_cast<double>(n - 2) / (1.0 - r2));
            res.p = student_t_two_sided_p(t, static_cast<double>(n - 2));
        }
    }
    return res;
}

AnovaResult anova(const std::vector<std::vector<double>> &groups) {
    if (groups.size() < 2)
        throw std::invalid_argument("anova needs at least two groups");
    for (const auto &g : groups)
        if (g.size() < 2)
            throw std::invalid_argument("anova needs at least two values per group");

    double grand = 0.0;
    std::size_t total = 0;
    for (const auto &g : groups) {
        for (double v : g)
            grand += v;
        total += g.size();
    }
    grand /= static_cast<double>(total);

    double ssb = 0.0, ssw = 0.0;
    for (const auto &g : groups) {
        double mean = 0.0;
        for (double v : g)
            mean += v;
        mean /= static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
        for (double v : g)
            ssw += (v - mean) * (v - mean);
    }

    AnovaResult res;
    res.df_between = groups.size() - 1;
    res.df_within = total - groups.size();
    if (ssb <= 0.0) {
        res.f = 0.0;
        res.p = 1.0;
        return res;
    }
    if (ssw <= 0.0) {
        res.f = std::numeric_limits<double>::infinity();
        res.p = 0.0;
        return res;
    }
    const double msb = ssb / static_cast<double>(res.df_between);
    const double msw = ssw / static_cast<double>(res.df_within);
    res.f = msb / msw;
    res.p = f_upper_tail_p(res.f, static_cast<double>(res.df_between),
                           static_cast<double>(res.df_within));
    return res;
}

PairedTTestResult paired_ttest(std::span<const std::optional<double>> a,
                               std::span<const std::optional<double>> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("paired t-test inputs differ in length");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].has_value() && b[i].has_value())
            diffs.push_back(*b[i] - *a[i]);
    if (diffs.size() < 2)
        throw std::invalid_argument("paired t-test needs at least two complete pairs");

    const double n = static_cast<double>(diffs.size());
    double mean = 0.0;
    for (double d : diffs)
        mean += d;
    mean /= n;
    double ss = 0.0;
    for (double d : diffs)
        ss += (d - mean) * (d - mean);

    PairedTTestResult res;
    res.n = diffs.size();
    if (ss == 0.0) {
        if (mean != 0.0)
            throw std::invalid_argument(
                "paired t-test degenerate: constant nonzero differences");
        res.t = 0.0;
        res.p = 1.0;
        res.stars = "ns";
        return res;
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    res.t = mean / (sd / std::sqrt(n));
    res.p = student_t_two_sided_p(res.t, n - 1.0);
    res.stars = stars_for_p(res.p);
    return res;
}

std::vector<std::optional<double>> ScoreTable::column(std::size_t c) const {
    std::vector<std::optional<double>> out;
    out.reserve(tasks.size());
    for (const auto &row : cells)
        out.push_back(row.at(c));
    return out;
}

ScoreTable load_score_csv(const std::filesystem::path &path) {
    std::istringstream in(io::read_file(path));
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path.string() + ": empty score table");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();

    auto split = [](const std::string &s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ','))
            out.push_back(cell);
        if (!s.empty() && s.back() == ',')
            out.push_back("");
        return out;
    };

    const std::vector<std::string> header = split(line);
    if (header.size() < 2)
        throw std::runtime_error(path.string() + ": header needs a task column and checkpoints");

    ScoreTable table;
    std::vector<std::size_t> col_order; // file column index per checkpoint
    for (std::size_t c = 1; c < header.size(); ++c) {
        try {
            std::size_t used = 0;
            const std::int64_t step = std::stoll(header[c], &used);
            if (used != header[c].size())
                throw std::invalid_argument(header[c]);
            table.checkpoints.push_back(step);
        } catch (const std::exception &) {
            throw std::runtime_error(path.string() + ": checkpoint column '" + header[c] +
                                     "' is not an integer step");
        }
        col_order.push_back(c);
    }
    // Sort checkpoints ascending, carrying the file columns along.
    std::vector<std::size_t> perm(table.checkpoints.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        return table.checkpoints[a] < table.checkpoints[b];
    });
    std::vector<std::int64_t> sorted_steps;
    std::vector<std::size_t> sorted_cols;
    for (std::size_t p : perm) {
        sorted_steps.push_back(table.checkpoints[p]);
        sorted_cols.push_back(col_order[p]);
    }
    table.checkpoints = std::move(sorted_steps);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> cells = split(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) +
                                     " cells, got " + std::to_string(cells.size()));
        table.tasks.push_back(cells[0]);
        std::vector<std::optional<double>> row;
        for (std::size_t c : sorted_cols) {
            if (cells[c].empty()) {
                row.push_back(std::nullopt);
                continue;
            }
            try {
                std::size_t used = 0;
                const double v = std::stod(cells[c], &used);
                if (used != cells[c].size())
                    throw std::invalid_argument(cells[c]);
                row.push_back(v);
            } catch (const std::exception &) {
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": score '" + cells[c] + "' is not a number");
            }
        }
        table.cells.push_back(std::move(row));
    }
    if (table.tasks.empty())
        throw std::runtime_error(path.string() + ": score table has no task rows");
    return table;
}

std::vector<PairwiseCell> pairwise_ttests(const ScoreTable &table) {
    std::vector<PairwiseCell> out;
    for (std::size_t i = 0; i < table.checkpoints.size(); ++i) {
        const auto col_i = table.column(i);
        for (std::size_t j = i + 1; j < table.checkpoints.size(); ++j) {
            PairwiseCell cell;
            cell.a = table.checkpoints[i];
            cell.b = table.checkpoints[j];
            try {
                cell.result = paired_ttest(col_i, table.column(j));
            } catch (const std::invalid_argument &) {
                cell.result = std::nullopt;
            }
            out.push_back(std::move(cell));
        }
    }
    return out;
}

std::string pairwise_csv(const std::vector<PairwiseCell> &cells) {
    std::ostringstream out;
    out << "checkpoint_a,checkpoint_b,n,t,p,stars\n";
    out.precision(12);
    for (const auto &cell : cells) {
        out << cell.a << ',' << cell.b << ',';
        if (cell.result.has_value())
            out << cell.result->n << ',' << cell.result->t << ',' << cell.result->p << ','
                << cell.result->stars;
        else
            out << ",,,untestable";
        out << '\n';
    }
    return out.str();
}

PlateauResult find_plateau(const ScoreTable &table) {
    if (table.checkpoints.size() < 3)
        throw std::invalid_argument("plateau detection needs at least three checkpoints");
    for (std::size_t i = 0; i + 1 < table.checkpoints.size(); ++i) {
        const auto col_i = table.column(i);
        bool all_ns = true;
        for (std::size_t j = i + 1; j < table.checkpoints.size(); ++j) {
            try {
                if (paired_ttest(col_i, table.column(j)).stars != "ns") {
                    all_ns = false;
                    break;
                }
            } catch (const std::invalid_argument &) {
                all_ns = false;
                break;
            }
        }
        if (all_ns) {
            PlateauResult res;
            res.checkpoint = table.checkpoints[i];
            res.found = true;
            res.note = "no significant change against any later checkpoint";
            return res;
        }
    }
    PlateauResult res;
    res.checkpoint = table.checkpoints.back();
    res.found = false;
    res.note = "no plateau: scores still move against later checkpoints";
    return res;
}

CorrelationResult task_progress_correlation(const ScoreTable &table, std::size_t task_row) {
    if (task_row >= table.tasks.size())
        throw std::invalid_argument("task row out of range");
    std::vector<double> steps;
    std::vector<double> scores;
    for (std::size_t c = 0; c < table.checkpoints.size(); ++c) {
        const auto &cell = table.cells[task_row][c];
        if (cell.has_value()) {
            steps.push_back(static_cast<double>(table.checkpoints[c]));
            scores.push_back(*cell);
        }
    }
    return spearman(steps, scores);
}

} // namespace lltk::pstats
