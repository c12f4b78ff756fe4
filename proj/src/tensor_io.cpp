#include "sigmmd/tensor_io.hpp"

#include <bit>
#include <fstream>

#include "json.hpp"
#include "sigmmd/errors.hpp"

namespace sigmmd {

using nlohmann::json;

const Matrix& TensorFile::find(const std::string& name) const {
    for (const NamedTensor& t : tensors) {
        if (t.name == name) return t.value;
    }
    throw data_error("tensor file: missing tensor '" + name + "'");
}

void write_tensor_file(const std::string& path, const std::string& meta_json,
                       const std::vector<NamedTensor>& tensors) {
    static_assert(sizeof(double) == 8);
    if (std::endian::native != std::endian::little) {
        throw numeric_fault("tensor file: only little-endian hosts are supported");
    }
    json meta;
    try {
        meta = json::parse(meta_json.empty() ? "{}" : meta_json);
    } catch (const json::exception& e) {
        throw invalid_input(std::string("tensor file: metadata is not valid JSON: ") + e.what());
    }

    json header;
    header["format"] = "sigmmd-tensors-1";
    header["byte_order"] = "little";
    header["meta"] = meta;
    json shapes = json::array();
    for (const NamedTensor& t : tensors) {
        shapes.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}});
    }
    header["tensors"] = shapes;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("tensor file: cannot open '" + path + "' for writing");
    out << header.dump() << '\n';
    for (const NamedTensor& t : tensors) {
        out.write(reinterpret_cast<const char*>(t.value.data()),
                  static_cast<std::streamsize>(t.value.size() * sizeof(double)));
    }
    if (!out) throw data_error("tensor file: write to '" + path + "' failed");
}

TensorFile read_tensor_file(const std::string& path) {
    if (std::endian::native != std::endian::little) {
        throw numeric_fault("tensor file: only little-endian hosts are supported");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("tensor file: cannot open '" + path + "'");
    std::string header_line;
    if (!std::getline(in, header_line)) throw data_error("tensor file: missing header line");

    json header;
    try {
        header = json::parse(header_line);
    } catch (const json::exception& e) {
        throw data_error(std::string("tensor file: bad header: ") + e.what());
    }
    if (header.value("format", "") != std::string("sigmmd-tensors-1")) {
        throw data_error("tensor file: unrecognized format tag");
    }
    if (header.value("byte_order", "") != std::string("little")) {
        throw data_error("tensor file: unsupported byte order");
    }

    TensorFile out;
    out.meta_json = header.value("meta", json::object()).dump();
    for (const json& shape : header.value("tensors", json::array())) {
        NamedTensor t;
        t.name = shape.at("name").get<std::string>();
        t.value.resize(shape.at("rows").get<std::size_t>(), shape.at("cols").get<std::size_t>());
        in.read(reinterpret_cast<char*>(t.value.data()),
                static_cast<std::streamsize>(t.value.size() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(t.value.size() * sizeof(double))) {
            throw data_error("tensor file: truncated payload for '" + t.name + "'");
        }
        out.tensors.push_back(std::move(t));
    }
    return out;
}

void save_generator(const std::string& path, const GeneratorParams& params) {
    params.validate();
    json meta;
    meta["kind"] = "generator";
    meta["hidden_size"] = params.hidden_size;
    meta["noise_dim"] = params.noise_dim;

    std::vector<NamedTensor> tensors;
    const std::vector<const Matrix*> values = params.tensors();
    const std::vector<const char*> names = GeneratorParams::tensor_names();
    for (std::size_t i = 0; i < values.size(); ++i) {
        tensors.push_back({names[i], *values[i]});
    }
    write_tensor_file(path, meta.dump(), tensors);
}

GeneratorParams load_generator(const std::string& path) {
    const TensorFile file = read_tensor_file(path);
    const json meta = json::parse(file.meta_json);
    if (meta.value("kind", "") != std::string("generator")) {
        throw data_error("tensor file: '" + path + "' does not hold generator parameters");
    }
    GeneratorParams params;
    params.hidden_size = meta.at("hidden_size").get<std::size_t>();
    params.noise_dim = meta.at("noise_dim").get<std::size_t>();

    const std::vector<Matrix*> values = params.tensors();
    const std::vector<const char*> names = GeneratorParams::tensor_names();
    for (std::size_t i = 0; i < values.size(); ++i) *values[i] = file.find(names[i]);
    params.validate();
    return params;
}

void save_noise_model(const std::string& path, const NoiseModel& model) {
    model.validate();
    json meta;
    meta["kind"] = "noise-model";
    meta["p"] = model.ma.p();

    std::vector<NamedTensor> tensors;
    tensors.push_back(
        {"lambert", Matrix{{model.lambert.delta}, {model.lambert.mu}, {model.lambert.sigma}}});
    Matrix ma(model.ma.p() + 1, 1);
    ma(0, 0) = model.ma.omega;
    for (std::size_t i = 0; i < model.ma.p(); ++i) ma(i + 1, 0) = model.ma.betas[i];
    tensors.push_back({"ma", ma});
    tensors.push_back({"gaussianized_history", Matrix::column(model.gaussianized_history)});
    write_tensor_file(path, meta.dump(), tensors);
}

NoiseModel load_noise_model(const std::string& path) {
    const TensorFile file = read_tensor_file(path);
    const json meta = json::parse(file.meta_json);
    if (meta.value("kind", "") != std::string("noise-model")) {
        throw data_error("tensor file: '" + path + "' does not hold a noise model");
    }
    NoiseModel model;
    const Matrix& lambert = file.find("lambert");
    if (lambert.size() != 3) throw data_error("tensor file: lambert block must have 3 entries");
    model.lambert.delta = lambert[0];
    model.lambert.mu = lambert[1];
    model.lambert.sigma = lambert[2];

    const Matrix& ma = file.find("ma");
    if (ma.size() == 0) throw data_error("tensor file: ma block is empty");
    model.ma.omega = ma[0];
    model.ma.betas.assign(ma.storage().begin() + 1, ma.storage().end());

    model.gaussianized_history = file.find("gaussianized_history").storage();
    model.validate();
    return model;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

}  // namespace sigmmd
