#include "lltk/dedup.hpp"

#include "lltk/text.hpp"

namespace lltk::dedup {

ParagraphDeduper::ParagraphDeduper(DedupConfig cfg, BloomFilter &filter,
                                   DedupReport &report, AuditSink audit)
    : cfg_(std::move(cfg)), filter_(filter), report_(report), audit_(std::move(audit)) {}

std::string ParagraphDeduper::normalize_key(std::string_view paragraph_text) const {
    const std::string_view trimmed = text::trim_whitespace(paragraph_text);
    if (cfg_.normalize_lowercase)
        return text::ascii_lower(trimmed);
    return std::string(trimmed);
}

bool ParagraphDeduper::process(corpus::Document &doc) {
    const auto paragraphs = corpus::split_paragraphs(doc);
    if (paragraphs.empty())
        return true;

    std::string kept;
    kept.reserve(doc.raw_content.size());
    std::size_t kept_count = 0;
    bool removed_any = false;

    for (const auto &para : paragraphs) {
        report_.paragraphs_seen.fetch_add(1, std::memory_order_relaxed);
        bool keep = true;
        if (corpus::word_count(para.text) < cfg_.min_words) {
            report_.paragraphs_exempt_short.fetch_add(1, std::memory_order_relaxed);
        } else {
            const std::string key = normalize_key(para.text);
            if (filter_.test_and_insert(key)) {
                keep = false;
                removed_any = true;
                report_.paragraphs_removed.fetch_add(1, std::memory_order_relaxed);
                if (audit_)
                    audit_({doc.doc_id, para.index, "duplicate", snippet_utf8(para.text)});
            }
        }
        if (keep) {
            if (kept_count > 0)
                kept.push_back('\n');
            kept.append(para.text);
            ++kept_count;
        }
    }

    if (removed_any) {
        doc.raw_content = std::move(kept);
        doc.dup_flag = true;
    }
    if (kept_count == 0) {
        report_.documents_emptied.fetch_add(1, std::memory_order_relaxed);
        return !cfg_.drop_emptied_documents;
    }
    return true;
}

std::string snippet_utf8(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes)
        return std::string(s);
    // Cut at a code point boundary.
    std::size_t end = max_bytes;
    while (end > 0 && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80)
        --end;
    return std::string(s.substr(0, end));
}

} // namespace lltk::dedup
