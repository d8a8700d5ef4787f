#include "lltk/corpus_io.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>

namespace lltk::corpus {

using nlohmann::json;

const char *partition_name(Partition p) {
    switch (p) {
    case Partition::Head: return "head";
    case Partition::Middle: return "middle";
    case Partition::Tail: return "tail";
    }
    return "head";
}

std::optional<Partition> partition_from_name(std::string_view name) {
    if (name == "head")
        return Partition::Head;
    if (name == "middle")
        return Partition::Middle;
    if (name == "tail")
        return Partition::Tail;
    return std::nullopt;
}

ShardReader::ShardReader(ShardRef ref, ErrorPolicy on_error)
    : ref_(std::move(ref)), on_error_(on_error), lines_(ref_.path) {}

std::optional<Document> ShardReader::next() {
    while (lines_.next_line(linebuf_)) {
        if (linebuf_.empty())
            continue;

        // Repair before parsing: strict JSON parsers reject ill-formed UTF-8,
        // and one bad byte must not cost a document.
        const std::string *line = &linebuf_;
        const std::size_t repairs = text::repair_utf8(linebuf_, repaired_);
        if (repairs > 0) {
            stats_.utf8_repairs += repairs;
            line = &repaired_;
        }

        std::string reason;
        json rec = json::parse(*line, nullptr, false);
        if (rec.is_discarded()) {
            reason = "invalid JSON";
        } else if (!rec.is_object()) {
            reason = "line is not a JSON object";
        } else if (!rec.contains("raw_content") || !rec["raw_content"].is_string()) {
            reason = "missing string field raw_content";
        } else if (!rec.contains("doc_id") || !rec["doc_id"].is_string() ||
                   rec["doc_id"].get_ref<const std::string &>().empty()) {
            reason = "missing or empty doc_id";
        }
        if (!reason.empty()) {
            if (on_error_ == ErrorPolicy::Abort)
                throw std::runtime_error(ref_.path.string() + ":" +
                                         std::to_string(lines_.line_number()) + ": " + reason);
            ++stats_.malformed_lines;
            errors_.push_back({lines_.line_number(), reason});
            continue;
        }

        Document doc;
        doc.doc_id = rec["doc_id"].get<std::string>();
        doc.raw_content = rec["raw_content"].get<std::string>();
        doc.partition = ref_.partition;
        if (rec.contains("url") && rec["url"].is_string())
            doc.url = rec["url"].get<std::string>();
        if (rec.contains("dup_flag") && rec["dup_flag"].is_boolean())
            doc.dup_flag = rec["dup_flag"].get<bool>();
        if (rec.contains("quality_signals") && rec["quality_signals"].is_object()) {
            const auto &qs = rec["quality_signals"];
            if (qs.contains("ccnet_perplexity") && qs["ccnet_perplexity"].is_number()) {
                const double ppl = qs["ccnet_perplexity"].get<double>();
                if (std::isfinite(ppl) && ppl >= 0)
                    doc.quality.ccnet_perplexity = ppl;
            }
        }
        if (!doc.quality.ccnet_perplexity)
            ++stats_.missing_quality;
        ++stats_.documents;
        return doc;
    }
    return std::nullopt;
}

ShardRef make_shard_ref(const std::filesystem::path &path,
                        std::optional<Partition> partition_override,
                        Partition fallback) {
    ShardRef ref;
    ref.path = path;
    const std::string name = path.filename().string();
    if (partition_override) {
        ref.partition = *partition_override;
    } else if (name.find("head") != std::string::npos) {
        ref.partition = Partition::Head;
    } else if (name.find("middle") != std::string::npos) {
        ref.partition = Partition::Middle;
    } else if (name.find("tail") != std::string::npos) {
        ref.partition = Partition::Tail;
    } else {
        ref.partition = fallback;
    }

    // Snapshot ids look like 2014_52 or 2014-52 somewhere in the path.
    const std::string full = path.string();
    for (std::size_t i = 0; i + 7 <= full.size(); ++i) {
        const auto digit = [&](std::size_t k) {
            return std::isdigit(static_cast<unsigned char>(full[i + k])) != 0;
        };
        if (digit(0) && digit(1) && digit(2) && digit(3) &&
            (full[i + 4] == '_' || full[i + 4] == '-') && digit(5) && digit(6)) {
            ref.snapshot_id = full.substr(i, 7);
            ref.snapshot_id[4] = '_';
            break;
        }
    }
    return ref;
}

std::vector<Paragraph> split_paragraphs(const Document &doc) {
    std::vector<Paragraph> out;
    const auto segments = text::split_lines_nonempty(doc.raw_content);
    out.reserve(segments.size());
    for (std::size_t i = 0; i < segments.size(); ++i)
        out.push_back(Paragraph{segments[i], i});
    return out;
}

std::string document_to_jsonl(const Document &doc) {
    json rec;
    rec["doc_id"] = doc.doc_id;
    rec["raw_content"] = doc.raw_content;
    if (doc.url)
        rec["url"] = *doc.url;
    if (doc.dup_flag)
        rec["dup_flag"] = true;
    if (doc.quality.ccnet_perplexity)
        rec["quality_signals"] = {{"ccnet_perplexity", *doc.quality.ccnet_perplexity}};
    return rec.dump();
}

} // namespace lltk::corpus
