#include "lltk/quality.hpp"

#include "lltk/text.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lltk::quality {

std::optional<double> token_word_ratio(const tok::Tokenizer &tok, std::string_view text) {
    const std::uint64_t words = text::word_count(text);
    if (words == 0)
        return std::nullopt;
    const std::uint64_t tokens = tok.token_count(text);
    return static_cast<double>(tokens) / static_cast<double>(words);
}

namespace {

// Keep iff the ratio does not exceed the threshold or is undefined.
bool ratio_keeps(std::optional<double> ratio, double threshold) {
    return !ratio.has_value() || *ratio <= threshold;
}

} // namespace

bool apply_ratio_filter(corpus::Document &doc, const tok::Tokenizer &tok,
                        const RatioFilterConfig &cfg, RatioFilterStats &stats,
                        const AuditSink &audit) {
    if (cfg.document_level) {
        auto ratio = token_word_ratio(tok, doc.raw_content);
        if (!ratio.has_value()) {
            if (audit)
                audit({doc.doc_id, 0, "ratio_undefined", std::nullopt});
            return true;
        }
        if (*ratio <= cfg.threshold)
            return true;
        ++stats.documents_removed;
        if (audit)
            audit({doc.doc_id, 0, "ratio", ratio});
        return false;
    }

    auto paragraphs = corpus::split_paragraphs(doc);
    std::string kept;
    bool removed_any = false;
    for (const auto &para : paragraphs) {
        ++stats.paragraphs_seen;
        auto ratio = token_word_ratio(tok, para.text);
        if (!ratio.has_value()) {
            ++stats.paragraphs_undefined;
            if (audit)
                audit({doc.doc_id, para.index, "ratio_undefined", std::nullopt});
        } else if (*ratio > cfg.threshold) {
            ++stats.paragraphs_removed;
            removed_any = true;
            if (audit)
                audit({doc.doc_id, para.index, "ratio", ratio});
            continue;
        }
        if (!kept.empty())
            kept.push_back('\n');
        kept.append(para.text);
    }
    if (removed_any)
        doc.raw_content = std::move(kept);
    if (!paragraphs.empty() && doc.raw_content.empty()) {
        ++stats.documents_emptied;
        return false;
    }
    return true;
}

bool partition_filter(const corpus::Document &doc, const PartitionPolicy &policy,
                      const AuditSink &audit) {
    if (policy.keep.count(doc.partition))
        return true;
    if (audit)
        audit({doc.doc_id, 0, "partition", std::nullopt});
    return false;
}

void PerplexityAccumulator::add(const corpus::Document &doc) {
    if (doc.quality.ccnet_perplexity.has_value())
        values_.push_back(*doc.quality.ccnet_perplexity);
    else
        ++missing_;
}

void PerplexityAccumulator::merge(const PerplexityAccumulator &other) {
    values_.insert(values_.end(), other.values_.begin(), other.values_.end());
    missing_ += other.missing_;
}

PerplexitySummary PerplexityAccumulator::summarize() const {
    if (values_.empty())
        throw std::runtime_error("no document carries a perplexity value");
    std::vector<double> sorted = values_;
    std::sort(sorted.begin(), sorted.end());
    PerplexitySummary s;
    s.count = sorted.size();
    s.count_missing = missing_;
    s.min = sorted.front();
    s.max = sorted.back();
    double sum = 0.0;
    for (double v : sorted)
        sum += v;
    s.mean = sum / static_cast<double>(sorted.size());
    for (int i = 1; i <= 9; ++i) {
        // Quantile by linear interpolation at h = (n - 1) * p.
        const double h = static_cast<double>(sorted.size() - 1) * (i / 10.0);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = h - static_cast<double>(lo);
        s.deciles[static_cast<std::size_t>(i - 1)] =
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
    }
    return s;
}

} // namespace lltk::quality
