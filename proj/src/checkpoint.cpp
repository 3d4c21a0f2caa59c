#include "windownet/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "windownet/error.hpp"

namespace windownet {

const NamedArray& Checkpoint::array(std::string_view name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw DataError("checkpoint has no array named '" + std::string(name) + "'");
}

bool Checkpoint::has_array(std::string_view name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  std::ostringstream out(std::ios::binary);
  out.write("WNCK", 4);
  detail::write_u32(out, ck.version);
  const std::string text = ck.config.to_text();
  detail::write_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  detail::write_u32(out, static_cast<std::uint32_t>(ck.arrays.size()));
  for (const auto& a : ck.arrays) {
    std::size_t n = 1;
    for (auto d : a.dims) n *= d;
    if (n != a.values.size()) {
      throw ParameterError("checkpoint array '" + a.name + "' dims do not match payload size");
    }
    detail::write_u32(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    detail::write_u32(out, static_cast<std::uint32_t>(a.dims.size()));
    for (auto d : a.dims) detail::write_u32(out, d);
    for (double v : a.values) detail::write_f64(out, v);
  }
  return std::move(out).str();
}

Checkpoint deserialize_checkpoint(std::string_view bytes, const std::string& source) {
  std::istringstream in{std::string(bytes), std::ios::binary};
  detail::ByteReader r(in, source);
  char magic[4];
  r.read(magic, 4);
  if (std::string_view(magic, 4) != "WNCK") {
    throw DataError(source + ": not a checkpoint (bad magic bytes)");
  }
  Checkpoint ck;
  ck.version = r.u32();
  if (ck.version != Checkpoint::kVersion) {
    throw DataError(source + ": checkpoint version " + std::to_string(ck.version) +
                    " is not supported (expected " + std::to_string(Checkpoint::kVersion) + ")");
  }
  const auto text_len = r.u32();
  if (text_len > bytes.size()) throw DataError(source + ": corrupt config length");
  std::string text(text_len, '\0');
  r.read(text.data(), text_len);
  try {
    ck.config = KeyValues::parse(text);
  } catch (const ParameterError& e) {
    throw DataError(source + ": corrupt config block: " + e.what());
  }
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const auto name_len = r.u32();
    if (name_len > 4096) throw DataError(source + ": corrupt array name length");
    a.name.resize(name_len);
    r.read(a.name.data(), name_len);
    const auto rank = r.u32();
    if (rank > 8) throw DataError(source + ": array '" + a.name + "' has corrupt rank");
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      a.dims.push_back(r.u32());
      n *= a.dims.back();
    }
    if (n * 8 > bytes.size()) throw DataError(source + ": array '" + a.name + "' has corrupt dims");
    a.values.resize(n);
    for (double& v : a.values) v = r.f64();
    ck.arrays.push_back(std::move(a));
  }
  if (r.offset() != bytes.size()) {
    throw DataError(source + ": " + std::to_string(bytes.size() - r.offset()) +
                    " trailing bytes after last array");
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open checkpoint");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str(), path.string());
}

}  // namespace windownet
