#include "lltk/ckpt_avg.hpp"

#include "lltk/io_util.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <stdexcept>

namespace lltk::ckpt {

namespace {

std::uint64_t element_count(const std::vector<std::uint64_t> &dims) {
    std::uint64_t n = 1;
    for (std::uint64_t d : dims) {
        if (d == 0)
            return 0;
        if (n > UINT64_MAX / d)
            throw std::invalid_argument("tensor shape overflows");
        n *= d;
    }
    return n;
}

} // namespace

const Tensor *WeightContainer::find(const std::string &name) const {
    for (const auto &t : tensors)
        if (t.name == name)
            return &t;
    return nullptr;
}

WeightContainer average(const std::vector<WeightContainer> &containers) {
    if (containers.empty())
        throw std::invalid_argument("nothing to average");
    const WeightContainer &first = containers.front();

    std::string mismatches;
    for (std::size_t ci = 1; ci < containers.size(); ++ci) {
        const WeightContainer &c = containers[ci];
        for (const auto &t : first.tensors) {
            const Tensor *other = c.find(t.name);
            if (!other)
                mismatches += " '" + t.name + "' missing from checkpoint " + std::to_string(ci);
            else if (other->dims != t.dims)
                mismatches += " '" + t.name + "' shape differs in checkpoint " + std::to_string(ci);
        }
        for (const auto &t : c.tensors)
            if (!first.find(t.name))
                mismatches += " '" + t.name + "' only in checkpoint " + std::to_string(ci);
    }
    if (!mismatches.empty())
        throw std::invalid_argument("checkpoints disagree:" + mismatches);

    WeightContainer out;
    out.tensors.reserve(first.tensors.size());
    const double k = static_cast<double>(containers.size());
    for (const auto &t : first.tensors) {
        Tensor avg;
        avg.name = t.name;
        avg.dims = t.dims;
        avg.data.resize(t.data.size());
        std::vector<double> acc(t.data.size(), 0.0);
        for (const auto &c : containers) {
            const Tensor *src = c.find(t.name);
            for (std::size_t i = 0; i < acc.size(); ++i)
                acc[i] += static_cast<double>(src->data[i]);
        }
        for (std::size_t i = 0; i < acc.size(); ++i)
            avg.data[i] = static_cast<float>(acc[i] / k);
        out.tensors.push_back(std::move(avg));
    }
    return out;
}

void save_container(const WeightContainer &c, const std::filesystem::path &path) {
    std::string buf;
    buf.append("LLWC", 4);
    io::put_u32(buf, 1);
    io::put_u32(buf, static_cast<std::uint32_t>(c.tensors.size()));
    for (const auto &t : c.tensors) {
        if (element_count(t.dims) != t.data.size())
            throw std::invalid_argument("tensor '" + t.name + "' data does not match its shape");
        io::put_u32(buf, static_cast<std::uint32_t>(t.name.size()));
        buf.append(t.name);
        io::put_u32(buf, static_cast<std::uint32_t>(t.dims.size()));
        for (std::uint64_t d : t.dims)
            io::put_u64(buf, d);
        for (float v : t.data)
            io::put_f32(buf, v);
    }
    io::write_file_atomic(path, buf);
}

WeightContainer load_container(const std::filesystem::path &path) {
    io::BinReader r(path);
    r.expect_magic("LLWC", "weight container");
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw std::runtime_error(path.string() + ": unsupported container version " +
                                 std::to_string(version));
    const std::uint32_t count = r.u32();
    WeightContainer c;
    c.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor t;
        const std::uint32_t name_len = r.u32();
        t.name = r.bytes(name_len);
        const std::uint32_t rank = r.u32();
        t.dims.reserve(rank);
        for (std::uint32_t d = 0; d < rank; ++d)
            t.dims.push_back(r.u64());
        const std::uint64_t n = element_count(t.dims);
        t.data.reserve(n);
        for (std::uint64_t e = 0; e < n; ++e)
            t.data.push_back(r.f32());
        c.tensors.push_back(std::move(t));
    }
    if (!r.at_end())
        throw std::runtime_error(path.string() + ": trailing bytes after tensors");
    return c;
}

WeightContainer load_manifest_dir(const std::filesystem::path &dir,
                                  const std::string &manifest_name) {
    const std::filesystem::path manifest_path = dir / manifest_name;
    nlohmann::json manifest = nlohmann::json::parse(io::read_file(manifest_path));
    if (!manifest.is_object() || !manifest.contains("tensors") ||
        !manifest["tensors"].is_array())
        throw std::runtime_error(manifest_path.string() + ": expected a 'tensors' array");

    WeightContainer c;
    for (const auto &entry : manifest["tensors"]) {
        Tensor t;
        t.name = entry.at("name").get<std::string>();
        for (const auto &d : entry.at("dims"))
            t.dims.push_back(d.get<std::uint64_t>());
        const std::filesystem::path file = dir / entry.at("file").get<std::string>();
        const std::string raw = io::read_file(file);
        const std::uint64_t n = element_count(t.dims);
        if (raw.size() != n * 4)
            throw std::runtime_error(file.string() + ": expected " + std::to_string(n * 4) +
                                     " bytes of f32 data, found " + std::to_string(raw.size()));
        t.data.resize(n);
        std::memcpy(t.data.data(), raw.data(), raw.size());
        c.tensors.push_back(std::move(t));
    }
    return c;
}

} // namespace lltk::ckpt
