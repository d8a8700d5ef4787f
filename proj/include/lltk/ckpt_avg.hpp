#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lltk::ckpt {

struct Tensor {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> data; // row-major, matches the product of dims
};

struct WeightContainer {
    std::vector<Tensor> tensors; // order preserved from file or manifest

    const Tensor *find(const std::string &name) const;
};

// Element-wise mean: accumulate each element in double over the containers
// in input order, divide once, round once to float. Containers must agree on
// tensor names and shapes; the error names every mismatch.
WeightContainer average(const std::vector<WeightContainer> &containers);

void save_container(const WeightContainer &c, const std::filesystem::path &path);
WeightContainer load_container(const std::filesystem::path &path);

// Converts a directory holding a JSON manifest ("tensors": [{name, dims,
// file}]) plus raw little-endian f32 files into a container.
WeightContainer load_manifest_dir(const std::filesystem::path &dir,
                                  const std::string &manifest_name = "manifest.json");

} // namespace lltk::ckpt
