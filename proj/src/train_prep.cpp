#include "lltk/train_prep.hpp"

#include "lltk/hash.hpp"
#include "lltk/io_util.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace lltk::pack {

std::uint64_t FisherYates::next() {
    // splitmix64; fixed here so every platform shuffles identically
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<std::uint64_t> FisherYates::permutation(std::uint64_t n) {
    std::vector<std::uint64_t> p(n);
    for (std::uint64_t i = 0; i < n; ++i)
        p[i] = i;
    for (std::uint64_t i = n; i > 1; --i) {
        std::uint64_t j = next() % i;
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

std::string corpus_manifest_hash(const std::vector<corpus::Document> &docs) {
    std::string buf;
    buf.reserve(docs.size() * 32);
    auto append_hash = [&](Hash128 h) {
        char raw[16];
        std::memcpy(raw, &h.lo, 8);
        std::memcpy(raw + 8, &h.hi, 8);
        buf.append(raw, 16);
    };
    for (const auto &doc : docs) {
        append_hash(hash128(doc.doc_id));
        append_hash(hash128(doc.raw_content));
    }
    Hash128 digest = hash128(buf);
    char hex[33];
    std::snprintf(hex, sizeof hex, "%016llx%016llx",
                  static_cast<unsigned long long>(digest.hi),
                  static_cast<unsigned long long>(digest.lo));
    return std::string(hex, 32);
}

PackResult pack(const std::vector<corpus::Document> &docs, const tok::Tokenizer &tok,
                const PackConfig &cfg) {
    if (cfg.seq_len == 0)
        throw std::invalid_argument("sequence length must be positive");
    if (cfg.sequences_per_shard == 0)
        throw std::invalid_argument("sequences per shard must be positive");

    PackResult res;
    res.seq_len = cfg.seq_len;
    res.log.seed = cfg.shuffle_seed;
    res.log.seq_len = cfg.seq_len;
    res.log.tokenizer_id = tok.id();
    res.log.corpus_manifest_hash = corpus_manifest_hash(docs);

    std::vector<std::uint64_t> order;
    if (cfg.shuffle_seed.has_value()) {
        order = FisherYates(*cfg.shuffle_seed).permutation(docs.size());
    } else {
        order.resize(docs.size());
        for (std::uint64_t i = 0; i < docs.size(); ++i)
            order[i] = i;
    }

    const std::uint32_t L = cfg.seq_len;
    std::vector<std::uint32_t> row;
    row.reserve(L);
    std::uint64_t rows_done = 0;
    std::vector<std::uint32_t> current_shard;

    auto flush_row = [&] {
        current_shard.insert(current_shard.end(), row.begin(), row.end());
        row.clear();
        ++rows_done;
        if (current_shard.size() == static_cast<std::size_t>(cfg.sequences_per_shard) * L) {
            res.shards.push_back(std::move(current_shard));
            current_shard = {};
        }
    };

    for (std::uint64_t oi : order) {
        const corpus::Document &doc = docs[oi];
        std::vector<std::uint32_t> ids = tok.encode(doc.raw_content);
        ids.push_back(cfg.separator_id);
        std::uint64_t off = 0;
        while (off < ids.size()) {
            const std::uint64_t take =
                std::min<std::uint64_t>(ids.size() - off, L - row.size());
            res.log.entries.push_back({rows_done, doc.doc_id, off, take});
            row.insert(row.end(), ids.begin() + static_cast<std::ptrdiff_t>(off),
                       ids.begin() + static_cast<std::ptrdiff_t>(off + take));
            off += take;
            if (row.size() == L)
                flush_row();
        }
    }

    if (!row.empty()) {
        res.log.dropped_tail_tokens = row.size();
        while (!res.log.entries.empty() &&
               res.log.entries.back().global_sequence_index == rows_done)
            res.log.entries.pop_back();
        row.clear();
    }
    if (!current_shard.empty())
        res.shards.push_back(std::move(current_shard));
    res.log.sequences = rows_done;
    return res;
}

std::vector<std::uint32_t> replay(const DataOrderLog &log,
                                  const std::vector<corpus::Document> &docs,
                                  const tok::Tokenizer &tok, std::uint32_t separator_id) {
    if (log.tokenizer_id != tok.id())
        throw std::runtime_error("replay tokenizer '" + tok.id() + "' does not match log '" +
                                 log.tokenizer_id + "'");
    if (corpus_manifest_hash(docs) != log.corpus_manifest_hash)
        throw std::runtime_error("corpus does not match the data-order log manifest hash");

    std::unordered_map<std::string, const corpus::Document *> by_id;
    for (const auto &doc : docs)
        by_id.emplace(doc.doc_id, &doc);

    std::unordered_map<std::string, std::vector<std::uint32_t>> token_cache;
    std::vector<std::uint32_t> out;
    out.reserve(log.sequences * log.seq_len);
    for (const auto &entry : log.entries) {
        auto cached = token_cache.find(entry.doc_id);
        if (cached == token_cache.end()) {
            auto doc_it = by_id.find(entry.doc_id);
            if (doc_it == by_id.end())
                throw std::runtime_error("log references unknown doc id: " + entry.doc_id);
            std::vector<std::uint32_t> ids = tok.encode(doc_it->second->raw_content);
            ids.push_back(separator_id);
            cached = token_cache.emplace(entry.doc_id, std::move(ids)).first;
        }
        const auto &ids = cached->second;
        if (entry.token_offset_in_doc + entry.token_span_length > ids.size())
            throw std::runtime_error("log span exceeds document '" + entry.doc_id + "'");
        out.insert(out.end(),
                   ids.begin() + static_cast<std::ptrdiff_t>(entry.token_offset_in_doc),
                   ids.begin() + static_cast<std::ptrdiff_t>(entry.token_offset_in_doc +
                                                             entry.token_span_length));
    }
    if (out.size() != log.sequences * log.seq_len)
        throw std::runtime_error("log entries do not tile the recorded sequences");
    return out;
}

std::map<std::string, std::vector<SpanEntry>>
checkpoint_window(const DataOrderLog &log, std::uint64_t step_a, std::uint64_t step_b,
                  std::uint64_t batch_size, std::uint64_t seqs_per_step) {
    if (step_a > step_b)
        throw std::invalid_argument("checkpoint window is reversed");
    if (batch_size == 0 || seqs_per_step == 0)
        throw std::invalid_argument("batch size and sequences per step must be positive");
    const std::uint64_t lo = step_a * batch_size * seqs_per_step;
    const std::uint64_t hi = step_b * batch_size * seqs_per_step;
    if (hi > log.sequences)
        throw std::invalid_argument("checkpoint window extends past the logged sequences");
    std::map<std::string, std::vector<SpanEntry>> out;
    for (const auto &entry : log.entries) {
        if (entry.global_sequence_index >= lo && entry.global_sequence_index < hi)
            out[entry.doc_id].push_back(entry);
    }
    return out;
}

void save_shard(const std::vector<std::uint32_t> &rows, std::uint32_t seq_len,
                const std::filesystem::path &path) {
    if (seq_len == 0 || rows.size() % seq_len != 0)
        throw std::invalid_argument("shard payload is not a whole number of rows");
    std::string buf;
    buf.reserve(16 + rows.size() * 4);
    buf.append("LLPK", 4);
    io::put_u32(buf, 1);
    io::put_u32(buf, seq_len);
    io::put_u32(buf, static_cast<std::uint32_t>(rows.size() / seq_len));
    for (std::uint32_t t : rows)
        io::put_u32(buf, t);
    io::write_file_atomic(path, buf);
}

std::pair<std::vector<std::uint32_t>, std::uint32_t>
load_shard(const std::filesystem::path &path) {
    io::BinReader r(path);
    r.expect_magic("LLPK", "packed shard");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw std::runtime_error(path.string() + ": unsupported shard version " +
                                 std::to_string(version));
    const std::uint32_t seq_len = r.u32();
    const std::uint32_t rows = r.u32();
    std::vector<std::uint32_t> out;
    out.reserve(static_cast<std::size_t>(seq_len) * rows);
    for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(seq_len) * rows; ++i)
        out.push_back(r.u32());
    if (!r.at_end())
        throw std::runtime_error(path.string() + ": trailing bytes after shard payload");
    return {std::move(out), seq_len};
}

void save_log(const DataOrderLog &log, const std::filesystem::path &entries_path,
              const std::filesystem::path &header_path) {
    nlohmann::json header;
    header["seed"] = log.seed.has_value() ? nlohmann::json(*log.seed) : nlohmann::json();
    header["seq_len"] = log.seq_len;
    header["tokenizer_id"] = log.tokenizer_id;
    header["corpus_manifest_hash"] = log.corpus_manifest_hash;
    header["sequences"] = log.sequences;
    header["dropped_tail_tokens"] = log.dropped_tail_tokens;
    io::write_file_atomic(header_path, header.dump(2) + "\n");

    io::AtomicFileWriter w(entries_path);
    for (const auto &e : log.entries) {
        nlohmann::json j;
        j["seq"] = e.global_sequence_index;
        j["doc_id"] = e.doc_id;
        j["offset"] = e.token_offset_in_doc;
        j["length"] = e.token_span_length;
        w.write(j.dump() + "\n");
    }
    w.commit();
}

DataOrderLog load_log(const std::filesystem::path &entries_path,
                      const std::filesystem::path &header_path) {
    DataOrderLog log;
    nlohmann::json header = nlohmann::json::parse(io::read_file(header_path));
    if (!header.at("seed").is_null())
        log.seed = header.at("seed").get<std::uint64_t>();
    log.seq_len = header.at("seq_len").get<std::uint32_t>();
    log.tokenizer_id = header.at("tokenizer_id").get<std::string>();
    log.corpus_manifest_hash = header.at("corpus_manifest_hash").get<std::string>();
    log.sequences = header.at("sequences").get<std::uint64_t>();
    log.dropped_tail_tokens = header.at("dropped_tail_tokens").get<std::uint64_t>();

    std::istringstream lines(io::read_file(entries_path));
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty())
            continue;
        nlohmann::json j = nlohmann::json::parse(line);
        log.entries.push_back({j.at("seq").get<std::uint64_t>(),
                               j.at("doc_id").get<std::string>(),
                               j.at("offset").get<std::uint64_t>(),
                               j.at("length").get<std::uint64_t>()});
    }
    return log;
}

} // namespace lltk::pack
