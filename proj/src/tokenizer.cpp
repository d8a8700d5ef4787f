#include "lltk/tokenizer.hpp"

#include "lltk/io_util.hpp"
#include "lltk/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace lltk::tok {

namespace {

std::string cp_to_utf8(std::uint32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

constexpr std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

} // namespace

ByteAlphabet::ByteAlphabet() {
    auto printable = [](int b) {
        return (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || (b >= 174 && b <= 255);
    };
    std::uint32_t next = 256;
    for (int b = 0; b < 256; ++b) {
        std::uint32_t cp = printable(b) ? static_cast<std::uint32_t>(b) : next++;
        byte_to_cp[static_cast<std::size_t>(b)] = cp;
        cp_to_byte.emplace(cp, static_cast<std::uint8_t>(b));
    }
}

const ByteAlphabet &ByteAlphabet::instance() {
    static const ByteAlphabet table;
    return table;
}

std::string ByteAlphabet::marker_string(std::string_view bytes) const {
    std::string out;
    out.reserve(bytes.size());
    for (unsigned char b : bytes)
        out += cp_to_utf8(byte_to_cp[b]);
    return out;
}

std::string ByteAlphabet::bytes_from_markers(std::string_view markers) const {
    std::string out;
    out.reserve(markers.size());
    std::size_t i = 0;
    std::uint32_t cp = 0;
    while (text::next_codepoint(markers, i, cp)) {
        auto it = cp_to_byte.find(cp);
        if (it == cp_to_byte.end())
            throw std::runtime_error("token string contains a non-marker code point");
        out.push_back(static_cast<char>(it->second));
    }
    return out;
}

std::vector<std::string_view> pretokenize(std::string_view text) {
    std::vector<std::string_view> out;
    const std::size_t n = text.size();
    std::size_t i = 0;
    std::size_t word_start = std::string_view::npos;
    while (i < n) {
        std::size_t next = i;
        std::uint32_t cp = 0;
        lltk::text::next_codepoint(text, next, cp);
        if (!lltk::text::is_whitespace_cp(cp)) {
            if (word_start == std::string_view::npos)
                word_start = i;
            i = next;
            continue;
        }
        if (word_start != std::string_view::npos) {
            out.push_back(text.substr(word_start, i - word_start));
            word_start = std::string_view::npos;
        }
        const std::size_t ws_start = i;
        i = next;
        while (i < n) {
            std::size_t peek = i;
            std::uint32_t wcp = 0;
            lltk::text::next_codepoint(text, peek, wcp);
            if (!lltk::text::is_whitespace_cp(wcp))
                break;
            i = peek;
        }
        if (i < n && text[i - 1] == ' ') {
            // A single space travels with the word it precedes.
            if (i - 1 > ws_start)
                out.push_back(text.substr(ws_start, i - 1 - ws_start));
            word_start = i - 1;
        } else {
            out.push_back(text.substr(ws_start, i - ws_start));
        }
    }
    if (word_start != std::string_view::npos)
        out.push_back(text.substr(word_start));
    return out;
}

void ByteBpeModel::index_merges() {
    merge_rules_.clear();
    merge_rules_.reserve(merges_.size());
    for (std::uint32_t rank = 0; rank < merges_.size(); ++rank) {
        auto [a, b] = merges_[rank];
        const std::string merged = token_strings_[a] + token_strings_[b];
        auto it = vocab_.find(merged);
        if (it == vocab_.end())
            throw std::runtime_error("merge result missing from vocab: " + merged);
        merge_rules_.emplace(pair_key(a, b), MergeRule{rank, it->second});
    }
}

void ByteBpeModel::encode_pretoken(std::string_view bytes, std::vector<std::uint32_t> &out) const {
    std::vector<std::uint32_t> syms;
    syms.reserve(bytes.size());
    for (unsigned char b : bytes)
        syms.push_back(byte_ids_[b]);
    while (syms.size() > 1) {
        std::uint32_t best_rank = UINT32_MAX;
        std::uint64_t best_key = 0;
        std::uint32_t best_id = 0;
        for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
            auto it = merge_rules_.find(pair_key(syms[i], syms[i + 1]));
            if (it != merge_rules_.end() && it->second.rank < best_rank) {
                best_rank = it->second.rank;
                best_key = pair_key(syms[i], syms[i + 1]);
                best_id = it->second.merged_id;
            }
        }
        if (best_rank == UINT32_MAX)
            break;
        // Apply the winning merge to every occurrence, left to right, exactly
        // as training did.
        std::vector<std::uint32_t> next;
        next.reserve(syms.size());
        std::size_t i = 0;
        while (i < syms.size()) {
            if (i + 1 < syms.size() && pair_key(syms[i], syms[i + 1]) == best_key) {
                next.push_back(best_id);
                i += 2;
            } else {
                next.push_back(syms[i]);
                ++i;
            }
        }
        syms = std::move(next);
    }
    out.insert(out.end(), syms.begin(), syms.end());
}

std::vector<std::uint32_t> ByteBpeModel::encode(std::string_view text) const {
    std::vector<std::uint32_t> out;
    for (std::string_view pre : pretokenize(text))
        encode_pretoken(pre, out);
    return out;
}

std::string ByteBpeModel::decode(std::span<const std::uint32_t> ids) const {
    const auto &alphabet = ByteAlphabet::instance();
    std::string out;
    for (std::uint32_t id : ids) {
        if (id >= token_strings_.size())
            throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
        if (is_special_[id])
            continue;
        out += alphabet.bytes_from_markers(token_strings_[id]);
    }
    return out;
}

std::optional<std::uint32_t> ByteBpeModel::token_id(std::string_view token) const {
    auto it = vocab_.find(std::string(token));
    if (it == vocab_.end())
        return std::nullopt;
    return it->second;
}

std::string ByteBpeModel::merges_text() const {
    std::string out;
    for (auto [a, b] : merges_) {
        out += token_strings_[a];
        out += ' ';
        out += token_strings_[b];
        out += '\n';
    }
    return out;
}

std::string ByteBpeModel::vocab_json() const {
    nlohmann::json obj = nlohmann::json::object();
    for (std::uint32_t id = 0; id < token_strings_.size(); ++id)
        obj[token_strings_[id]] = id;
    return obj.dump();
}

void ByteBpeModel::save(const std::filesystem::path &vocab_path,
                        const std::filesystem::path &merges_path) const {
    io::write_file_atomic(vocab_path, vocab_json());
    io::write_file_atomic(merges_path, merges_text());
}

ByteBpeModel ByteBpeModel::base(std::vector<std::string> specials) {
    ByteBpeModel m;
    const auto &alphabet = ByteAlphabet::instance();
    m.special_count_ = specials.size();
    for (auto &s : specials) {
        if (m.vocab_.count(s))
            throw std::invalid_argument("duplicate special token: " + s);
        m.vocab_.emplace(s, static_cast<std::uint32_t>(m.token_strings_.size()));
        m.token_strings_.push_back(std::move(s));
        m.is_special_.push_back(true);
    }
    for (int b = 0; b < 256; ++b) {
        std::string marker = cp_to_utf8(alphabet.byte_to_cp[static_cast<std::size_t>(b)]);
        std::uint32_t id = static_cast<std::uint32_t>(m.token_strings_.size());
        if (m.vocab_.count(marker))
            throw std::invalid_argument("special token collides with a byte marker");
        m.vocab_.emplace(marker, id);
        m.token_strings_.push_back(std::move(marker));
        m.is_special_.push_back(false);
        m.byte_ids_[static_cast<std::size_t>(b)] = id;
    }
    return m;
}

ByteBpeModel ByteBpeModel::load(const std::filesystem::path &vocab_path,
                                const std::filesystem::path &merges_path) {
    const auto &alphabet = ByteAlphabet::instance();
    ByteBpeModel m;

    nlohmann::json obj = nlohmann::json::parse(io::read_file(vocab_path));
    if (!obj.is_object())
        throw std::runtime_error(vocab_path.string() + ": vocab must be a JSON object");
    const std::size_t v = obj.size();
    m.token_strings_.assign(v, {});
    std::vector<bool> seen(v, false);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!it.value().is_number_unsigned())
            throw std::runtime_error(vocab_path.string() + ": id for '" + it.key() +
                                     "' must be a non-negative integer");
        std::uint64_t id = it.value().get<std::uint64_t>();
        if (id >= v || seen[id])
            throw std::runtime_error(vocab_path.string() + ": token ids must be dense and unique");
        seen[id] = true;
        m.token_strings_[id] = it.key();
        m.vocab_.emplace(it.key(), static_cast<std::uint32_t>(id));
    }

    for (int b = 0; b < 256; ++b) {
        std::string marker = cp_to_utf8(alphabet.byte_to_cp[static_cast<std::size_t>(b)]);
        auto it = m.vocab_.find(marker);
        if (it == m.vocab_.end())
            throw std::runtime_error(vocab_path.string() + ": missing byte token for byte " +
                                     std::to_string(b));
        m.byte_ids_[static_cast<std::size_t>(b)] = it->second;
    }

    m.is_special_.assign(v, true);
    for (std::uint32_t id : m.byte_ids_)
        m.is_special_[id] = false;

    std::string merges_raw = io::read_file(merges_path);
    std::istringstream lines(merges_raw);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.empty() || line.rfind("#version", 0) == 0)
            continue;
        std::size_t sp = line.find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size())
            throw std::runtime_error(merges_path.string() + ":" + std::to_string(line_no) +
                                     ": expected 'left right'");
        std::string left = line.substr(0, sp);
        std::string right = line.substr(sp + 1);
        auto li = m.vocab_.find(left);
        auto ri = m.vocab_.find(right);
        if (li == m.vocab_.end() || ri == m.vocab_.end())
            throw std::runtime_error(merges_path.string() + ":" + std::to_string(line_no) +
                                     ": merge side missing from vocab");
        m.merges_.emplace_back(li->second, ri->second);
    }
    m.index_merges();
    for (const auto &rule : m.merge_rules_)
        m.is_special_[rule.second.merged_id] = false;

    std::size_t specials = 0;
    for (bool flag : m.is_special_)
        if (flag)
            ++specials;
    if (specials + 256 + m.merges_.size() != v)
        throw std::runtime_error(vocab_path.string() +
                                 ": vocab size does not equal specials + 256 + merges");
    m.special_count_ = specials;
    return m;
}

void BpeTrainer::add_text(std::string_view text) {
    for (std::string_view pre : pretokenize(text))
        word_counts_[std::string(pre)] += 1;
    corpus_bytes_ += text.size();
}

void BpeTrainer::merge_from(BpeTrainer &&other) {
    if (word_counts_.empty()) {
        word_counts_ = std::move(other.word_counts_);
    } else {
        for (auto &kv : other.word_counts_)
            word_counts_[kv.first] += kv.second;
    }
    corpus_bytes_ += other.corpus_bytes_;
    other.word_counts_.clear();
    other.corpus_bytes_ = 0;
}

ByteBpeModel BpeTrainer::train(const TrainConfig &cfg) const {
    if (cfg.vocab_size < 256 + cfg.specials.size())
        throw std::invalid_argument("vocab size must cover the specials and all 256 byte tokens");
    if (word_counts_.empty())
        throw std::runtime_error("tokenizer training corpus is empty");

    ByteBpeModel m = ByteBpeModel::base(cfg.specials);
    const std::size_t target = cfg.vocab_size - 256 - cfg.specials.size();

    struct Word {
        std::vector<std::uint32_t> syms;
        std::uint64_t count;
    };
    std::vector<Word> words;
    words.reserve(word_counts_.size());
    for (const auto &[bytes, count] : word_counts_) {
        Word w;
        w.count = count;
        w.syms.reserve(bytes.size());
        for (unsigned char b : bytes)
            w.syms.push_back(m.byte_ids_[b]);
        words.push_back(std::move(w));
    }
    // Deterministic word order regardless of hash-map iteration.
    std::sort(words.begin(), words.end(),
              [&](const Word &x, const Word &y) { return x.syms < y.syms; });

    std::unordered_map<std::uint64_t, std::int64_t> pair_counts;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where;
    for (std::uint32_t wi = 0; wi < words.size(); ++wi) {
        const Word &w = words[wi];
        for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
            std::uint64_t key = pair_key(w.syms[i], w.syms[i + 1]);
            pair_counts[key] += static_cast<std::int64_t>(w.count);
            where[key].push_back(wi);
        }
    }

    struct HeapEntry {
        std::int64_t count;
        std::uint32_t a, b;
    };
    auto later = [&](const HeapEntry &x, const HeapEntry &y) {
        if (x.count != y.count)
            return x.count < y.count;
        if (m.token_strings_[x.a] != m.token_strings_[y.a])
            return m.token_strings_[x.a] > m.token_strings_[y.a];
        return m.token_strings_[x.b] > m.token_strings_[y.b];
    };
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, decltype(later)> heap(later);
    for (const auto &[key, count] : pair_counts)
        heap.push({count, static_cast<std::uint32_t>(key >> 32),
                   static_cast<std::uint32_t>(key & 0xFFFFFFFFu)});

    std::unordered_set<std::uint64_t> dead;

    while (m.merges_.size() < target && !heap.empty()) {
        HeapEntry top = heap.top();
        heap.pop();
        std::uint64_t key = pair_key(top.a, top.b);
        if (dead.count(key))
            continue;
        auto pc = pair_counts.find(key);
        if (pc == pair_counts.end() || pc->second != top.count)
            continue; // stale entry; the current count has its own entry
        if (top.count < 2)
            break;

        const std::string merged = m.token_strings_[top.a] + m.token_strings_[top.b];
        if (m.vocab_.count(merged)) {
            // Merging would duplicate an existing token string; the pair can
            // never become a new token, so retire it.
            dead.insert(key);
            continue;
        }

        const std::uint32_t new_id = static_cast<std::uint32_t>(m.token_strings_.size());
        m.vocab_.emplace(merged, new_id);
        m.token_strings_.push_back(merged);
        m.is_special_.push_back(false);
        m.merges_.emplace_back(top.a, top.b);

        auto wit = where.find(key);
        std::vector<std::uint32_t> touched;
        if (wit != where.end()) {
            touched = std::move(wit->second);
            where.erase(wit);
        }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

        std::map<std::uint64_t, std::int64_t> delta;
        for (std::uint32_t wi : touched) {
            Word &w = words[wi];
            bool has = false;
            for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
                if (w.syms[i] == top.a && w.syms[i + 1] == top.b) {
                    has = true;
                    break;
                }
            }
            if (!has)
                continue;
            const std::int64_t c = static_cast<std::int64_t>(w.count);
            for (std::size_t i = 0; i + 1 < w.syms.size(); ++i)
                delta[pair_key(w.syms[i], w.syms[i + 1])] -= c;
            std::vector<std::uint32_t> next;
            next.reserve(w.syms.size());
            std::size_t i = 0;
            while (i < w.syms.size()) {
                if (i + 1 < w.syms.size() && w.syms[i] == top.a && w.syms[i + 1] == top.b) {
                    next.push_back(new_id);
                    i += 2;
                } else {
                    next.push_back(w.syms[i]);
                    ++i;
                }
            }
            w.syms = std::move(next);
            for (std::size_t j = 0; j + 1 < w.syms.size(); ++j) {
                std::uint64_t k = pair_key(w.syms[j], w.syms[j + 1]);
                delta[k] += c;
                where[k].push_back(wi);
            }
        }

        for (const auto &[k, d] : delta) {
            if (d == 0)
                continue;
            std::int64_t updated = (pair_counts[k] += d);
            if (updated <= 0) {
                pair_counts.erase(k);
                continue;
            }
            heap.push({updated, static_cast<std::uint32_t>(k >> 32),
                       static_cast<std::uint32_t>(k & 0xFFFFFFFFu)});
        }
        pair_counts.erase(key);
    }

    m.index_merges();
    return m;
}

FertilityReport fertility(const Tokenizer &tok,
                          const std::function<std::optional<corpus::Document>()> &docs,
                          std::string sample_id, bool per_document_mean) {
    FertilityReport rep;
    rep.tokenizer_id = tok.id();
    rep.sample_id = std::move(sample_id);
    rep.per_document_mean = per_document_mean;
    double ratio_sum = 0.0;
    std::uint64_t ratio_docs = 0;
    while (auto doc = docs()) {
        const std::uint64_t w = corpus::word_count(doc->raw_content);
        const std::uint64_t t = tok.token_count(doc->raw_content);
        rep.word_count += w;
        rep.token_count += t;
        if (w > 0) {
            ratio_sum += static_cast<double>(t) / static_cast<double>(w);
            ++ratio_docs;
        }
    }
    if (per_document_mean) {
        if (ratio_docs == 0)
            throw std::runtime_error("fertility undefined: no document contains a word");
        rep.fertility = ratio_sum / static_cast<double>(ratio_docs);
    } else {
        if (rep.word_count == 0)
            throw std::runtime_error("fertility undefined: corpus contains no words");
        rep.fertility =
            static_cast<double>(rep.token_count) / static_cast<double>(rep.word_count);
    }
    return rep;
}

TokenFrequencyReport token_frequency(const ByteBpeModel &tok,
                                     const std::function<std::optional<corpus::Document>()> &docs,
                                     std::size_t k) {
    std::unordered_map<std::uint32_t, std::uint64_t> counts;
    TokenFrequencyReport rep;
    while (auto doc = docs()) {
        for (std::uint32_t id : tok.encode(doc->raw_content)) {
            ++counts[id];
            ++rep.total_tokens;
        }
    }
    rep.unique_token_count = counts.size();
    std::vector<std::pair<std::uint32_t, std::uint64_t>> order(counts.begin(), counts.end());
    std::sort(order.begin(), order.end(), [](const auto &x, const auto &y) {
        if (x.second != y.second)
            return x.second > y.second;
        return x.first < y.first;
    });
    if (order.size() > k)
        order.resize(k);
    for (auto [id, count] : order)
        rep.top.emplace_back(tok.token_strings()[id], count);
    return rep;
}

} // namespace lltk::tok
