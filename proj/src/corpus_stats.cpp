#include "lltk/corpus_stats.hpp"

#include "lltk/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace lltk::stats {

Uniqueness UniquenessTracker::classify(const corpus::Document &doc) {
    return seen_.insert(hash128(doc.raw_content)).second ? Uniqueness::Unique
                                                         : Uniqueness::Duplicate;
}

std::string host_from_url(const corpus::Document &doc) {
    if (!doc.url.has_value() || doc.url->empty())
        return "(unknown)";
    std::string_view s = *doc.url;
    if (std::size_t scheme = s.find("://"); scheme != std::string_view::npos)
        s.remove_prefix(scheme + 3);
    // authority ends at the first path, query or fragment delimiter
    std::size_t end = s.find_first_of("/?#");
    if (end != std::string_view::npos)
        s = s.substr(0, end);
    if (std::size_t at = s.rfind('@'); at != std::string_view::npos)
        s.remove_prefix(at + 1);
    if (!s.empty() && s.front() == '[') {
        // bracketed IPv6 literal; the port follows the closing bracket
        if (std::size_t close = s.find(']'); close != std::string_view::npos)
            s = s.substr(0, close + 1);
    } else if (std::size_t colon = s.find(':'); colon != std::string_view::npos) {
        s = s.substr(0, colon);
    }
    if (s.empty())
        return "(unknown)";
    return text::ascii_lower(s);
}

void StatsCollector::add(const corpus::Document &doc, Uniqueness uniqueness) {
    PartitionBucket &bucket = stats_.partitions[doc.partition];
    ++bucket.documents;
    ++stats_.documents;
    if (uniqueness == Uniqueness::Duplicate)
        ++bucket.duplicate_documents;
    if (tokenizer_) {
        stats_.has_token_counts = true;
        const std::uint64_t tokens = tokenizer_->token_count(doc.raw_content);
        bucket.total_tokens += tokens;
        bucket.max_doc_tokens = std::max(bucket.max_doc_tokens, tokens);
        auto &bins = uniqueness == Uniqueness::Duplicate ? bucket.duplicate_length_bins
                                                         : bucket.unique_length_bins;
        ++bins[tokens];
    }
    std::string host = host_from_url(doc);
    if (host == "(unknown)")
        ++stats_.documents_without_url;
    ++stats_.domains[host];
}

void StatsCollector::merge(const StatsCollector &other) {
    const CorpusStats &o = other.stats_;
    for (const auto &[part, bucket] : o.partitions) {
        PartitionBucket &mine = stats_.partitions[part];
        mine.documents += bucket.documents;
        mine.duplicate_documents += bucket.duplicate_documents;
        mine.total_tokens += bucket.total_tokens;
        mine.max_doc_tokens = std::max(mine.max_doc_tokens, bucket.max_doc_tokens);
        for (const auto &[len, n] : bucket.unique_length_bins)
            mine.unique_length_bins[len] += n;
        for (const auto &[len, n] : bucket.duplicate_length_bins)
            mine.duplicate_length_bins[len] += n;
    }
    for (const auto &[host, n] : o.domains)
        stats_.domains[host] += n;
    stats_.documents += o.documents;
    stats_.documents_without_url += o.documents_without_url;
    stats_.has_token_counts = stats_.has_token_counts || o.has_token_counts;
}

std::vector<DomainCount> StatsCollector::top_domains(std::size_t k) const {
    std::vector<DomainCount> all;
    all.reserve(stats_.domains.size());
    for (const auto &[host, n] : stats_.domains)
        all.push_back({host, n});
    std::sort(all.begin(), all.end(), [](const DomainCount &a, const DomainCount &b) {
        if (a.documents != b.documents)
            return a.documents > b.documents;
        return a.domain < b.domain;
    });
    if (all.size() > k)
        all.resize(k);
    return all;
}

std::string stats_json(const CorpusStats &stats, const std::vector<DomainCount> &top) {
    nlohmann::json j;
    j["documents"] = stats.documents;
    j["documents_without_url"] = stats.documents_without_url;
    nlohmann::json parts = nlohmann::json::object();
    for (const auto &[part, bucket] : stats.partitions) {
        nlohmann::json p;
        p["documents"] = bucket.documents;
        p["duplicate_documents"] = bucket.duplicate_documents;
        p["unique_documents"] = bucket.documents - bucket.duplicate_documents;
        if (stats.has_token_counts) {
            p["total_tokens"] = bucket.total_tokens;
            p["max_doc_tokens"] = bucket.max_doc_tokens;
            p["mean_doc_tokens"] = bucket.documents
                                       ? static_cast<double>(bucket.total_tokens) /
                                             static_cast<double>(bucket.documents)
                                       : 0.0;
            auto bins_json = [](const std::map<std::uint64_t, std::uint64_t> &bins) {
                nlohmann::json out = nlohmann::json::object();
                for (const auto &[len, n] : bins)
                    out[std::to_string(len)] = n;
                return out;
            };
            p["token_length_bins_unique"] = bins_json(bucket.unique_length_bins);
            p["token_length_bins_duplicate"] = bins_json(bucket.duplicate_length_bins);
        }
        parts[corpus::partition_name(part)] = std::move(p);
    }
    j["partitions"] = std::move(parts);
    nlohmann::json doms = nlohmann::json::array();
    for (const auto &d : top)
        doms.push_back({{"domain", d.domain}, {"documents", d.documents}});
    j["top_domains"] = std::move(doms);
    return j.dump(2) + "\n";
}

} // namespace lltk::stats
