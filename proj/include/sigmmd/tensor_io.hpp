#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigmmd/generator.hpp"
#include "sigmmd/matrix.hpp"
#include "sigmmd/noise_model.hpp"

namespace sigmmd {

struct NamedTensor {
    std::string name;
    Matrix value;
};

// Self-describing container: one JSON header line (format tag, byte order,
// tensor shapes, caller metadata), then the tensors' row-major bytes as raw
// little-endian 64-bit floats. The header is diffable, the payload exact.
struct TensorFile {
    std::string meta_json;  // caller metadata, a serialized JSON object
    std::vector<NamedTensor> tensors;

    const Matrix& find(const std::string& name) const;
};

void write_tensor_file(const std::string& path, const std::string& meta_json,
                       const std::vector<NamedTensor>& tensors);
TensorFile read_tensor_file(const std::string& path);

void save_generator(const std::string& path, const GeneratorParams& params);
GeneratorParams load_generator(const std::string& path);

void save_noise_model(const std::string& path, const NoiseModel& model);
NoiseModel load_noise_model(const std::string& path);

// FNV-1a over bytes; used for config hashes in run manifests.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace sigmmd
