#pragma once

// Independent reference implementations the tests compare the library
// against. Everything here favors obviousness over speed: full recounts,
// exhaustive enumeration, direct quadrature.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// GPT-2-style byte-to-marker table built from first principles.
std::string marker_utf8(std::uint32_t cp);
std::vector<std::string> build_byte_markers();

// Whitespace pre-tokenization with the leading-space attachment rule,
// written as a plain character scan (ASCII whitespace only; fixtures that
// use this oracle stay ASCII).
std::vector<std::string> simple_pretokenize(const std::string &text);

// Naive BPE: full adjacent-pair recount after every merge over marker-symbol
// words; highest count wins, ties to the lexicographically smallest
// (left, right) strings; a pair whose concatenation already names a token is
// skipped; stops when no pair occurs twice. Returns merges in training
// order, marker form.
std::vector<std::pair<std::string, std::string>>
naive_bpe_merges(const std::vector<std::string> &texts, std::size_t max_merges,
                 const std::vector<std::string> &specials);

// Exact paragraph dedup over a hash set: a trimmed paragraph with at least
// min_words words is removed iff its key was seen before; shorter paragraphs
// are always kept and never recorded. Returns per-document kept paragraph
// texts, in order.
std::vector<std::vector<std::string>>
exact_dedup(const std::vector<std::vector<std::string>> &docs_paragraphs,
            std::size_t min_words);

// Spearman r via average ranks and the raw-sum Pearson formula, p by
// enumerating all n! rank permutations (n <= 8).
struct SpearmanOracle {
    double r = 0.0;
    double p = 1.0;
};
SpearmanOracle spearman_exact(const std::vector<double> &x, const std::vector<double> &y);

// Upper-tail F probability by adaptive Simpson quadrature of the
// equivalent Beta density, absolute tolerance ~1e-9.
double f_tail_quadrature(double f, double d1, double d2);

// Paired t statistic from the textbook mean/sd formula.
double paired_t_statistic(const std::vector<double> &a, const std::vector<double> &b);

// Element-loop checkpoint mean: accumulate in double, divide, cast to f32.
std::vector<float> average_loop(const std::vector<const std::vector<float> *> &tensors);

} // namespace oracle
