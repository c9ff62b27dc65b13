#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vphoto/errors.hpp"

namespace vphoto {

/// On-disk model container shared by scorers and GAN snapshots.
///
///   "CRTM" | u32 format_version | u32 extractor_version | u32 activation
///   | u32 n_dims | u32 dims[n_dims] | u64 n_params | f64 params[n_params]
///
/// All integers and floats little-endian. A JSON sidecar (`<path>.json`)
/// carries training metadata.
struct ModelFile {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  std::uint32_t extractor_version = 0;
  std::uint32_t activation = 0;
  std::vector<std::uint32_t> dims;
  std::vector<double> params;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

  std::uint64_t read_uint(int nbytes) {
    need(static_cast<std::size_t>(nbytes));
    std::uint64_t v = 0;
    for (int i = 0; i < nbytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(nbytes);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read_uint(4)); }
  std::uint64_t u64() { return read_uint(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IncompatibleModel("truncated model file " + origin_);
  }
  const std::string& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_model_file(const ModelFile& m) {
  std::string out = "CRTM";
  detail::put_u32(out, m.format_version);
  detail::put_u32(out, m.extractor_version);
  detail::put_u32(out, m.activation);
  detail::put_u32(out, static_cast<std::uint32_t>(m.dims.size()));
  for (auto d : m.dims) detail::put_u32(out, d);
  detail::put_u64(out, m.params.size());
  for (double p : m.params) detail::put_u64(out, std::bit_cast<std::uint64_t>(p));
  return out;
}

inline ModelFile decode_model_file(const std::string& bytes, const std::string& origin = "<memory>") {
  detail::ByteReader r(bytes, origin);
  if (r.raw(4) != "CRTM") throw IncompatibleModel("bad magic in model file " + origin);
  ModelFile m;
  m.format_version = r.u32();
  if (m.format_version != ModelFile::kFormatVersion) {
    throw IncompatibleModel("unsupported model format version " + std::to_string(m.format_version) + " in " +
                            origin);
  }
  m.extractor_version = r.u32();
  m.activation = r.u32();
  const std::uint32_t nd = r.u32();
  if (nd > 64) throw IncompatibleModel("implausible dimension count in " + origin);
  for (std::uint32_t i = 0; i < nd; ++i) m.dims.push_back(r.u32());
  const std::uint64_t np = r.u64();
  if (np > (std::uint64_t{1} << 28)) throw IncompatibleModel("implausible parameter count in " + origin);
  m.params.reserve(np);
  for (std::uint64_t i = 0; i < np; ++i) m.params.push_back(r.f64());
  if (!r.at_end()) throw IncompatibleModel("trailing bytes in model file " + origin);
  return m;
}

inline void write_model_file(const std::filesystem::path& path, const ModelFile& m,
                             const nlohmann::json& sidecar = nlohmann::json::object()) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model " + path.string());
    const std::string bytes = encode_model_file(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing model " + path.string());
  }
  std::ofstream js(path.string() + ".json");
  if (!js) throw IoError("cannot write model sidecar for " + path.string());
  js << sidecar.dump(2) << '\n';
}

inline ModelFile read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model_file(bytes, path.string());
}

inline nlohmann::json read_model_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".json");
  if (!in) return nlohmann::json::object();
  return nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/true);
}

}  // namespace vphoto
