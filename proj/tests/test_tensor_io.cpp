#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>

#include "sigmmd/errors.hpp"
#include "sigmmd/rng.hpp"
#include "sigmmd/tensor_io.hpp"

using namespace sigmmd;

namespace {

struct TempFile {
    std::filesystem::path path;

    explicit TempFile(const char* tag) {
        path = std::filesystem::temp_directory_path() /
               (std::string("sigmmd_io_") + tag + ".bin");
    }
    ~TempFile() { std::filesystem::remove(path); }
};

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-5.0, 5.0);
    return m;
}

}  // namespace

TEST_CASE("tensor container round trip is bit exact") {
    TempFile f("roundtrip");
    Rng rng(3);
    std::vector<NamedTensor> tensors;
    tensors.push_back({"a", random_matrix(3, 4, rng)});
    tensors.push_back({"b", random_matrix(1, 1, rng)});
    tensors.push_back({"denormal", Matrix{{5e-324, -0.0}}});

    write_tensor_file(f.path.string(), R"({"note":"x","k":50})", tensors);
    const TensorFile got = read_tensor_file(f.path.string());
    REQUIRE(got.tensors.size() == 3);
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        CHECK(got.tensors[t].name == tensors[t].name);
        REQUIRE(got.tensors[t].value.same_shape(tensors[t].value));
        for (std::size_t i = 0; i < tensors[t].value.size(); ++i) {
            CHECK(got.tensors[t].value[i] == tensors[t].value[i]);
        }
    }
    CHECK(got.meta_json.find("\"k\":50") != std::string::npos);
    CHECK_THROWS_AS(got.find("missing"), data_error);
}

TEST_CASE("same content writes identical bytes") {
    TempFile f1("bytes1"), f2("bytes2");
    std::vector<NamedTensor> tensors{{"w", Matrix{{1.25, -3.5}, {0.0, 2.0}}}};
    write_tensor_file(f1.path.string(), R"({"seed":7})", tensors);
    write_tensor_file(f2.path.string(), R"({"seed":7})", tensors);

    std::ifstream a(f1.path, std::ios::binary), b(f2.path, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(!sa.empty());
}

TEST_CASE("generator parameters round trip") {
    TempFile f("generator");
    const GeneratorParams params = GeneratorParams::init(6, 3, 41);
    save_generator(f.path.string(), params);
    const GeneratorParams got = load_generator(f.path.string());

    CHECK(got.hidden_size == 6);
    CHECK(got.noise_dim == 3);
    const auto a = std::as_const(params).tensors();
    const auto b = std::as_const(got).tensors();
    for (std::size_t t = 0; t < a.size(); ++t) {
        REQUIRE(a[t]->same_shape(*b[t]));
        for (std::size_t i = 0; i < a[t]->size(); ++i) CHECK((*a[t])[i] == (*b[t])[i]);
    }
}

TEST_CASE("noise model round trip") {
    TempFile f("noise");
    NoiseModel model;
    model.lambert = {0.21, 0.0004, 0.011};
    model.ma.omega = 0.4;
    model.ma.betas = {0.3, 0.2, 0.05};
    model.gaussianized_history = {0.5, -1.25, 0.75, 2.0, -0.125};

    save_noise_model(f.path.string(), model);
    const NoiseModel got = load_noise_model(f.path.string());
    CHECK(got.lambert.delta == model.lambert.delta);
    CHECK(got.lambert.mu == model.lambert.mu);
    CHECK(got.lambert.sigma == model.lambert.sigma);
    CHECK(got.ma.omega == model.ma.omega);
    REQUIRE(got.ma.betas == model.ma.betas);
    CHECK(got.gaussianized_history == model.gaussianized_history);
}

TEST_CASE("kind tags are enforced") {
    TempFile f("kind");
    save_generator(f.path.string(), GeneratorParams::init(2, 1, 1));
    CHECK_THROWS_AS(load_noise_model(f.path.string()), data_error);
}

TEST_CASE("corrupt files are rejected") {
    TempFile f("corrupt");
    {
        std::ofstream out(f.path, std::ios::binary);
        out << R"({"format":"sigmmd-tensors-1","byte_order":"little","meta":{},)"
            << R"("tensors":[{"name":"w","rows":4,"cols":4}]})" << "\n"
            << "short";
    }
    CHECK_THROWS_AS(read_tensor_file(f.path.string()), data_error);

    {
        std::ofstream out(f.path, std::ios::binary);
        out << "not json\n";
    }
    CHECK_THROWS_AS(read_tensor_file(f.path.string()), data_error);

    {
        std::ofstream out(f.path, std::ios::binary);
        out << R"({"format":"something-else","byte_order":"little"})" << "\n";
    }
    CHECK_THROWS_AS(read_tensor_file(f.path.string()), data_error);

    CHECK_THROWS_AS(read_tensor_file("/nonexistent/file.bin"), data_error);
    CHECK_THROWS_AS(write_tensor_file(f.path.string(), "not json", {}), invalid_input);
}

TEST_CASE("fnv1a64 matches reference values") {
    CHECK(fnv1a64("") == 14695981039346656037ULL);
    CHECK(fnv1a64("a") == 12638187200555641996ULL);
    CHECK(fnv1a64("hello") == 11831194018420276491ULL);
    CHECK(fnv1a64("hello") != fnv1a64("hellp"));
}
