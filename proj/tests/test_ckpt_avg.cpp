#include "lltk/ckpt_avg.hpp"

#include "oracles.hpp"
#include "testutil.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

using namespace lltk;
using testutil::TempDir;

namespace {

ckpt::WeightContainer random_container(std::uint64_t seed) {
    testutil::Rng rng(seed);
    ckpt::WeightContainer c;
    ckpt::Tensor emb;
    emb.name = "embed.weight";
    emb.dims = {8, 4};
    for (int i = 0; i < 32; ++i)
        emb.data.push_back(static_cast<float>(rng.unit() * 2.0 - 1.0));
    ckpt::Tensor bias;
    bias.name = "lm_head.bias";
    bias.dims = {16};
    for (int i = 0; i < 16; ++i)
        bias.data.push_back(static_cast<float>(rng.unit() * 2.0 - 1.0));
    c.tensors = {std::move(emb), std::move(bias)};
    return c;
}

bool bit_equal(const std::vector<float> &a, const std::vector<float> &b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

} // namespace

TEST_SUITE("ckpt_avg") {

TEST_CASE("singleton average is the identity, bit-exact") {
    auto w = random_container(1);
    auto avg = ckpt::average({w});
    REQUIRE(avg.tensors.size() == 2);
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(avg.tensors[t].name == w.tensors[t].name);
        CHECK(avg.tensors[t].dims == w.tensors[t].dims);
        CHECK(bit_equal(avg.tensors[t].data, w.tensors[t].data));
    }
}

TEST_CASE("average of W and -W is exactly zero") {
    auto w = random_container(2);
    auto neg = w;
    for (auto &t : neg.tensors)
        for (auto &v : t.data)
            v = -v;
    auto avg = ckpt::average({w, neg});
    for (const auto &t : avg.tensors)
        for (float v : t.data) {
            CHECK(v == 0.0f);
            CHECK(!std::signbit(v));
        }
}

TEST_CASE("idempotence: k identical containers average to the original") {
    auto w = random_container(3);
    auto avg = ckpt::average({w, w, w, w, w});
    for (std::size_t t = 0; t < avg.tensors.size(); ++t)
        CHECK(bit_equal(avg.tensors[t].data, w.tensors[t].data));
}

TEST_CASE("three containers match the element-loop oracle bit-exactly") {
    auto a = random_container(10);
    auto b = random_container(11);
    auto c = random_container(12);
    auto avg = ckpt::average({a, b, c});
    for (std::size_t t = 0; t < avg.tensors.size(); ++t) {
        auto want = oracle::average_loop(
            {&a.tensors[t].data, &b.tensors[t].data, &c.tensors[t].data});
        CHECK(bit_equal(avg.tensors[t].data, want));
    }
}

TEST_CASE("order invariance for 16 containers of comparable magnitude") {
    // Magnitudes banded to [1000, 2000) so 16-term double sums are exact and
    // the single rounding makes the result independent of input order.
    std::vector<ckpt::WeightContainer> cs;
    for (std::uint64_t i = 0; i < 16; ++i) {
        auto c = random_container(100 + i);
        testutil::Rng rng(900 + i);
        for (auto &t : c.tensors)
            for (auto &v : t.data) {
                float sign = rng.below(2) ? 1.0f : -1.0f;
                v = sign * (1000.0f + 1000.0f * static_cast<float>(rng.unit()));
            }
        cs.push_back(std::move(c));
    }

    auto forward = ckpt::average(cs);
    std::vector<ckpt::WeightContainer> reversed(cs.rbegin(), cs.rend());
    auto backward = ckpt::average(reversed);
    std::vector<ckpt::WeightContainer> rotated(cs.begin() + 5, cs.end());
    rotated.insert(rotated.end(), cs.begin(), cs.begin() + 5);
    auto spun = ckpt::average(rotated);

    for (std::size_t t = 0; t < forward.tensors.size(); ++t) {
        CHECK(bit_equal(forward.tensors[t].data, backward.tensors[t].data));
        CHECK(bit_equal(forward.tensors[t].data, spun.tensors[t].data));
    }
}

TEST_CASE("linearity under power-of-two scaling") {
    auto a = random_container(20);
    auto b = random_container(21);
    auto scaled_a = a;
    auto scaled_b = b;
    for (auto *c : {&scaled_a, &scaled_b})
        for (auto &t : c->tensors)
            for (auto &v : t.data)
                v *= 4.0f;

    auto avg = ckpt::average({a, b});
    auto scaled_avg = ckpt::average({scaled_a, scaled_b});
    for (std::size_t t = 0; t < avg.tensors.size(); ++t) {
        REQUIRE(avg.tensors[t].data.size() == scaled_avg.tensors[t].data.size());
        for (std::size_t i = 0; i < avg.tensors[t].data.size(); ++i)
            CHECK(scaled_avg.tensors[t].data[i] == 4.0f * avg.tensors[t].data[i]);
    }
}

TEST_CASE("mismatched containers are rejected with names") {
    auto a = random_container(30);
    auto b = random_container(31);
    b.tensors[1].name = "other.bias";
    CHECK_THROWS_WITH_AS(ckpt::average({a, b}), doctest::Contains("lm_head.bias"),
                         std::invalid_argument);

    auto c = random_container(32);
    c.tensors[0].dims = {4, 8}; // same element count, different shape
    CHECK_THROWS_WITH_AS(ckpt::average({a, c}), doctest::Contains("embed.weight"),
                         std::invalid_argument);

    CHECK_THROWS_AS(ckpt::average({}), std::invalid_argument);
}

TEST_CASE("container file round-trips bit-exactly") {
    TempDir tmp;
    auto w = random_container(40);
    auto path = tmp / "model.llwc";
    ckpt::save_container(w, path);
    auto loaded = ckpt::load_container(path);

    REQUIRE(loaded.tensors.size() == w.tensors.size());
    for (std::size_t t = 0; t < w.tensors.size(); ++t) {
        CHECK(loaded.tensors[t].name == w.tensors[t].name);
        CHECK(loaded.tensors[t].dims == w.tensors[t].dims);
        CHECK(bit_equal(loaded.tensors[t].data, w.tensors[t].data));
    }

    CHECK(loaded.find("embed.weight") != nullptr);
    CHECK(loaded.find("missing") == nullptr);

    testutil::write_text(tmp / "bad.llwc", "XXXX1234");
    CHECK_THROWS(ckpt::load_container(tmp / "bad.llwc"));
}

TEST_CASE("save rejects a tensor whose data contradicts its shape") {
    TempDir tmp;
    auto w = random_container(41);
    w.tensors[0].data.pop_back();
    CHECK_THROWS_AS(ckpt::save_container(w, tmp / "x.llwc"), std::invalid_argument);
}

TEST_CASE("manifest directory converts raw f32 files") {
    TempDir tmp;
    auto w = random_container(50);

    nlohmann::json manifest;
    manifest["tensors"] = nlohmann::json::array();
    for (const auto &t : w.tensors) {
        std::string file = t.name + ".bin";
        std::string raw(t.data.size() * 4, '\0');
        std::memcpy(raw.data(), t.data.data(), raw.size());
        testutil::write_text(tmp / file, raw);
        manifest["tensors"].push_back({{"name", t.name}, {"dims", t.dims}, {"file", file}});
    }
    testutil::write_text(tmp / "manifest.json", manifest.dump());

    auto loaded = ckpt::load_manifest_dir(tmp.path());
    REQUIRE(loaded.tensors.size() == w.tensors.size());
    for (std::size_t t = 0; t < w.tensors.size(); ++t) {
        CHECK(loaded.tensors[t].name == w.tensors[t].name);
        CHECK(loaded.tensors[t].dims == w.tensors[t].dims);
        CHECK(bit_equal(loaded.tensors[t].data, w.tensors[t].data));
    }

    // payload size must match the declared shape
    testutil::write_text(tmp / (w.tensors[0].name + ".bin"), "1234");
    CHECK_THROWS(ckpt::load_manifest_dir(tmp.path()));
}

} // TEST_SUITE
