#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace oracle {

std::string marker_utf8(std::uint32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

std::vector<std::string> build_byte_markers() {
    std::vector<std::string> table(256);
    std::uint32_t next = 256;
    for (int b = 0; b < 256; ++b) {
        bool printable = (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || (b >= 174 && b <= 255);
        std::uint32_t cp = printable ? static_cast<std::uint32_t>(b) : next++;
        table[static_cast<std::size_t>(b)] = marker_utf8(cp);
    }
    return table;
}

std::vector<std::string> simple_pretokenize(const std::string &text) {
    auto is_ws = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    };
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (!is_ws(text[i])) {
            std::size_t j = i;
            while (j < n && !is_ws(text[j]))
                ++j;
            out.push_back(text.substr(i, j - i));
            i = j;
            continue;
        }
        std::size_t j = i;
        while (j < n && is_ws(text[j]))
            ++j;
        if (j < n && text[j - 1] == ' ') {
            if (j - 1 > i)
                out.push_back(text.substr(i, j - 1 - i));
            std::size_t k = j;
            while (k < n && !is_ws(text[k]))
                ++k;
            out.push_back(text.substr(j - 1, k - (j - 1)));
            i = k;
        } else {
            out.push_back(text.substr(i, j - i));
            i = j;
        }
    }
    return out;
}

std::vector<std::pair<std::string, std::string>>
naive_bpe_merges(const std::vector<std::string> &texts, std::size_t max_merges,
                 const std::vector<std::string> &specials) {
    const auto markers = build_byte_markers();

    // words as symbol sequences, with multiplicity
    std::map<std::vector<std::string>, std::uint64_t> words;
    for (const auto &t : texts) {
        for (const auto &pre : simple_pretokenize(t)) {
            std::vector<std::string> syms;
            syms.reserve(pre.size());
            for (unsigned char b : pre)
                syms.push_back(markers[b]);
            ++words[syms];
        }
    }

    std::set<std::string> vocab(specials.begin(), specials.end());
    for (const auto &m : markers)
        vocab.insert(m);

    std::vector<std::pair<std::string, std::string>> merges;
    while (merges.size() < max_merges) {
        std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
        for (const auto &[syms, c] : words)
            for (std::size_t i = 0; i + 1 < syms.size(); ++i)
                counts[{syms[i], syms[i + 1]}] += c;

        // map iteration is (left, right) ascending, so a strict > keeps the
        // lexicographically smallest pair on count ties
        std::uint64_t best_count = 0;
        std::pair<std::string, std::string> best;
        for (const auto &[pair, c] : counts) {
            if (vocab.count(pair.first + pair.second))
                continue;
            if (c > best_count) {
                best_count = c;
                best = pair;
            }
        }
        if (best_count < 2)
            break;

        merges.push_back(best);
        vocab.insert(best.first + best.second);

        std::map<std::vector<std::string>, std::uint64_t> next_words;
        const std::string merged = best.first + best.second;
        for (const auto &[syms, c] : words) {
            std::vector<std::string> out;
            out.reserve(syms.size());
            std::size_t i = 0;
            while (i < syms.size()) {
                if (i + 1 < syms.size() && syms[i] == best.first && syms[i + 1] == best.second) {
                    out.push_back(merged);
                    i += 2;
                } else {
                    out.push_back(syms[i]);
                    ++i;
                }
            }
            next_words[out] += c;
        }
        words = std::move(next_words);
    }
    return merges;
}

std::vector<std::vector<std::string>>
exact_dedup(const std::vector<std::vector<std::string>> &docs_paragraphs,
            std::size_t min_words) {
    auto trim = [](const std::string &s) {
        std::size_t a = s.find_first_not_of(" \t\r\n\f\v");
        if (a == std::string::npos)
            return std::string();
        std::size_t b = s.find_last_not_of(" \t\r\n\f\v");
        return s.substr(a, b - a + 1);
    };
    auto words = [](const std::string &s) {
        std::size_t n = 0;
        bool in = false;
        for (char c : s) {
            bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
            if (!ws && !in)
                ++n;
            in = !ws;
        }
        return n;
    };

    std::set<std::string> seen;
    std::vector<std::vector<std::string>> kept(docs_paragraphs.size());
    for (std::size_t d = 0; d < docs_paragraphs.size(); ++d) {
        for (const auto &p : docs_paragraphs[d]) {
            std::string key = trim(p);
            if (words(key) < min_words) {
                kept[d].push_back(p);
                continue;
            }
            if (seen.insert(key).second)
                kept[d].push_back(p);
        }
    }
    return kept;
}

namespace {

std::vector<double> average_ranks(const std::vector<double> &v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]])
            ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson_raw(const std::vector<double> &x, const std::vector<double> &y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    double num = n * sxy - sx * sy;
    double den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    if (den == 0)
        throw std::invalid_argument("zero rank variance");
    return num / den;
}

} // namespace

SpearmanOracle spearman_exact(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("need n >= 3 equal-length series");
    const std::size_t n = x.size();
    auto rx = average_ranks(x);
    auto ry = average_ranks(y);

    SpearmanOracle out;
    out.r = pearson_raw(rx, ry);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::uint64_t total = 0, hits = 0;
    const double target = std::fabs(out.r) - 1e-12;
    std::vector<double> py(n);
    do {
        for (std::size_t i = 0; i < n; ++i)
            py[i] = ry[perm[i]];
        ++total;
        if (std::fabs(pearson_raw(rx, py)) >= target)
            ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.p = static_cast<double>(hits) / static_cast<double>(total);
    return out;
}

namespace {

double simpson(double (*g)(double, double, double), double a2, double b2, double lo, double hi) {
    double mid = 0.5 * (lo + hi);
    return (hi - lo) / 6.0 * (g(lo, a2, b2) + 4.0 * g(mid, a2, b2) + g(hi, a2, b2));
}

double beta_integrand(double t, double a, double b) {
    if (t <= 0.0)
        return a > 1.0 ? 0.0 : (a == 1.0 ? std::pow(1.0 - t, b - 1.0) : HUGE_VAL);
    if (t >= 1.0)
        return b > 1.0 ? 0.0 : (b == 1.0 ? std::pow(t, a - 1.0) : HUGE_VAL);
    return std::pow(t, a - 1.0) * std::pow(1.0 - t, b - 1.0);
}

double adaptive(double (*g)(double, double, double), double a2, double b2, double lo, double hi,
                double whole, double eps, int depth) {
    double mid = 0.5 * (lo + hi);
    double left = simpson(g, a2, b2, lo, mid);
    double right = simpson(g, a2, b2, mid, hi);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive(g, a2, b2, lo, mid, left, eps / 2.0, depth - 1) +
           adaptive(g, a2, b2, mid, hi, right, eps / 2.0, depth - 1);
}

} // namespace

double f_tail_quadrature(double f, double d1, double d2) {
    if (f <= 0.0)
        return 1.0;
    // P(F > f) = I_x(d2/2, d1/2) with x = d2 / (d2 + d1 f)
    const double a = d2 / 2.0, b = d1 / 2.0;
    const double x = d2 / (d2 + d1 * f);
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double integral =
        adaptive(beta_integrand, a, b, 0.0, x, simpson(beta_integrand, a, b, 0.0, x), 1e-12, 60);
    return integral / std::exp(log_beta);
}

double paired_t_statistic(const std::vector<double> &a, const std::vector<double> &b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("need n >= 2 pairs");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i)
        d[i] = a[i] - b[i];
    double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double ss = 0;
    for (double v : d)
        ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    return mean / (sd / std::sqrt(static_cast<double>(n)));
}

std::vector<float> average_loop(const std::vector<const std::vector<float> *> &tensors) {
    if (tensors.empty())
        throw std::invalid_argument("no tensors");
    const std::size_t len = tensors.front()->size();
    std::vector<float> out(len);
    for (std::size_t i = 0; i < len; ++i) {
        double acc = 0.0;
        for (const auto *t : tensors)
            acc += static_cast<double>((*t)[i]);
        out[i] = static_cast<float>(acc / static_cast<double>(tensors.size()));
    }
    return out;
}

} // namespace oracle
