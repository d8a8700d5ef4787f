#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lltk::pstats {

// Regularized incomplete beta I_x(a, b), the only special function the
// significance tests need. Continued-fraction evaluation, relative error
// well under 1e-10 over the df ranges that occur here.
double incomplete_beta(double a, double b, double x);

// Two-sided p for Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

// Upper-tail p for an F statistic with (d1, d2) degrees of freedom.
double f_upper_tail_p(double f, double d1, double d2);

// "ns" above 0.05, then one star per factor-of-ten significance level down
// to 0.0001.
std::string stars_for_p(double p);

struct CorrelationResult {
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
    bool exact_p = false; // permutation p (small n) vs t approximation
};

// Spearman rank correlation with average ranks for ties. For n <= 8 the p
// value is the exact two-sided permutation fraction; beyond that the
// t approximation with n - 2 degrees of freedom. Throws when either side has
// fewer than 3 values or no rank variance.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

struct AnovaResult {
    double f = 0.0;
    double p = 1.0;
    std::size_t df_between = 0;
    std::size_t df_within = 0;
};

// One-way ANOVA across groups. Identical groups give F = 0, p = 1; zero
// within-group variance with distinct means gives p = 0. Requires at least
// two groups of at least two values each.
AnovaResult anova(const std::vector<std::vector<double>> &groups);

struct PairedTTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t n = 0; // pairs used after missing-value exclusion
    std::string stars;
};

// Paired two-sided t-test over per-task scores; a task missing on either
// side is excluded pairwise. Throws when fewer than two complete pairs
// remain or the differences are constant but nonzero (no variance to test).
PairedTTestResult paired_ttest(std::span<const std::optional<double>> a,
                               std::span<const std::optional<double>> b);

// Scores per task (rows) per checkpoint (columns); empty cells are missing.
struct ScoreTable {
    std::vector<std::string> tasks;
    std::vector<std::int64_t> checkpoints; // ascending
    std::vector<std::vector<std::optional<double>>> cells; // [task][checkpoint]

    std::vector<std::optional<double>> column(std::size_t c) const;
};

// CSV with a header "task,<step>,<step>,..."; empty cells mark missing
// scores. Column order in the file may be arbitrary; the table is sorted by
// step ascending.
ScoreTable load_score_csv(const std::filesystem::path &path);

struct PairwiseCell {
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::optional<PairedTTestResult> result; // empty when untestable
};

// All checkpoint pairs a < b.
std::vector<PairwiseCell> pairwise_ttests(const ScoreTable &table);

std::string pairwise_csv(const std::vector<PairwiseCell> &cells);

struct PlateauResult {
    std::int64_t checkpoint = 0;
    bool found = false; // false: no plateau, checkpoint is the last one
    std::string note;
};

// Earliest checkpoint whose paired t-tests against every later checkpoint
// are all non-significant. Requires at least three checkpoints. An
// untestable pair blocks the earlier checkpoint rather than passing it.
PlateauResult find_plateau(const ScoreTable &table);

// Spearman correlation between checkpoint step and score for one task row,
// skipping missing cells.
CorrelationResult task_progress_correlation(const ScoreTable &table, std::size_t task_row);

} // namespace lltk::pstats
