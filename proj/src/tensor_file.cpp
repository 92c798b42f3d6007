#include "cascade/tensor_file.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "cascade/errors.hpp"
#include "json.hpp"

namespace cascade {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

namespace {

double half_to_double(std::uint16_t h) {
  const int sign = (h >> 15) & 1;
  const int exp = (h >> 10) & 0x1f;
  const int mant = h & 0x3ff;
  double v;
  if (exp == 0) v = std::ldexp(mant, -24);
  else if (exp == 31) v = mant ? std::nan("") : INFINITY;
  else v = std::ldexp(mant + 1024, exp - 25);
  return sign ? -v : v;
}

double bf16_to_double(std::uint16_t b) {
  const std::uint32_t bits = static_cast<std::uint32_t>(b) << 16;
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

}  // namespace

TensorFile read_safetensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor file " + path.string());
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
  if (!in || header_len == 0 || header_len > (1ULL << 30))
    throw CheckpointError(path.string() + ": not a safetensors file");
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw CheckpointError(path.string() + ": truncated header");
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": malformed header: " + e.what());
  }

  TensorFile file;
  for (const auto& [name, info] : j.items()) {
    if (name == "__metadata__") {
      for (const auto& [k, v] : info.items()) file.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
      continue;
    }
    const auto dtype = info.at("dtype").get<std::string>();
    const auto shape = info.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = info.at("data_offsets").get<std::vector<std::uint64_t>>();
    if (shape.size() > 2) throw CheckpointError(path.string() + ": tensor '" + name + "' has rank > 2");
    const std::int64_t rows = shape.size() == 2 ? shape[0] : 1;
    const std::int64_t cols = shape.empty() ? 1 : shape.back();
    const std::size_t width = dtype == "F64" ? 8 : dtype == "F32" ? 4 : (dtype == "F16" || dtype == "BF16") ? 2 : 0;
    if (width == 0) throw CheckpointError(path.string() + ": unsupported dtype " + dtype + " for '" + name + "'");
    const std::uint64_t count = static_cast<std::uint64_t>(rows * cols);
    if (offsets.size() != 2 || offsets[1] > data.size() || offsets[1] - offsets[0] != count * width)
      throw CheckpointError(path.string() + ": bad data offsets for '" + name + "'");
    const char* p = data.data() + offsets[0];
    ad::Matrix m(rows, cols);
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t c = 0; c < cols; ++c, p += width) {
        double v;
        if (width == 8) {
          std::memcpy(&v, p, 8);
        } else if (width == 4) {
          float f;
          std::memcpy(&f, p, 4);
          v = f;
        } else {
          std::uint16_t u;
          std::memcpy(&u, p, 2);
          v = dtype == "F16" ? half_to_double(u) : bf16_to_double(u);
        }
        m(r, c) = v;
      }
    }
    file.tensors.emplace(name, std::move(m));
  }
  return file;
}

void write_safetensors(const std::filesystem::path& path, const TensorFile& file) {
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : file.tensors) {
    const std::uint64_t bytes = static_cast<std::uint64_t>(m.size()) * 8;
    header[name] = {{"dtype", "F64"},
                    {"shape", {m.rows(), m.cols()}},
                    {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  if (!file.metadata.empty()) header["__metadata__"] = file.metadata;
  std::string text = header.dump();
  while (text.size() % 8 != 0) text.push_back(' ');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write tensor file " + path.string());
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : file.tensors) {
    for (ad::Index r = 0; r < m.rows(); ++r)
      for (ad::Index c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace cascade
