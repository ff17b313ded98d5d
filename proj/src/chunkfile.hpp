#pragma once

// Internal chunked binary container shared by the history and decomposition
// file formats: magic + version header, then named typed 2-D chunks.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cyclofem::chunkfile {

enum class Dtype : std::uint8_t { f64 = 0, i64 = 1 };

struct Chunk {
  std::string name;
  Dtype dtype = Dtype::f64;
  std::uint64_t rows = 0, cols = 0;
  std::vector<double> f;
  std::vector<std::int64_t> i;
};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("file truncated: " + path);
  return v;
}

inline void write_chunk(std::ostream& os, const Chunk& c) {
  write_raw(os, static_cast<std::uint32_t>(c.name.size()));
  os.write(c.name.data(), static_cast<std::streamsize>(c.name.size()));
  write_raw(os, static_cast<std::uint8_t>(c.dtype));
  write_raw(os, c.rows);
  write_raw(os, c.cols);
  if (c.dtype == Dtype::f64)
    os.write(reinterpret_cast<const char*>(c.f.data()),
             static_cast<std::streamsize>(c.f.size() * sizeof(double)));
  else
    os.write(reinterpret_cast<const char*>(c.i.data()),
             static_cast<std::streamsize>(c.i.size() * sizeof(std::int64_t)));
}

inline Chunk read_chunk(std::istream& is, const std::string& path) {
  Chunk c;
  const auto name_len = read_raw<std::uint32_t>(is, path);
  if (name_len > 4096) throw std::runtime_error("chunk name too long: " + path);
  c.name.resize(name_len);
  is.read(c.name.data(), name_len);
  const auto dt = read_raw<std::uint8_t>(is, path);
  if (dt > 1) throw std::runtime_error("chunk has unknown dtype: " + path);
  c.dtype = static_cast<Dtype>(dt);
  c.rows = read_raw<std::uint64_t>(is, path);
  c.cols = read_raw<std::uint64_t>(is, path);
  const std::uint64_t n = c.rows * c.cols;
  if (n > (1ull << 34)) throw std::runtime_error("chunk implausibly large: " + path);
  if (c.dtype == Dtype::f64) {
    c.f.resize(n);
    is.read(reinterpret_cast<char*>(c.f.data()), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    c.i.resize(n);
    is.read(reinterpret_cast<char*>(c.i.data()),
            static_cast<std::streamsize>(n * sizeof(std::int64_t)));
  }
  if (!is) throw std::runtime_error("file truncated: " + path);
  return c;
}

inline Chunk vec_chunk(const std::string& name, const std::vector<double>& v) {
  Chunk c;
  c.name = name;
  c.rows = 1;
  c.cols = v.size();
  c.f = v;
  return c;
}

inline const Chunk& find_chunk(const std::vector<Chunk>& chunks, const std::string& name,
                               Dtype dtype, const std::string& path) {
  for (const auto& c : chunks)
    if (c.name == name) {
      if (c.dtype != dtype)
        throw std::runtime_error("chunk '" + name + "' has wrong dtype: " + path);
      return c;
    }
  throw std::runtime_error("chunk '" + name + "' missing: " + path);
}

// Writes magic (8 bytes), a version word, and all chunks.
inline void write_file(const std::string& path, const char magic[8], std::uint32_t version,
                       const std::vector<Chunk>& chunks) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open file for writing: " + path);
  os.write(magic, 8);
  write_raw(os, version);
  write_raw(os, static_cast<std::uint32_t>(chunks.size()));
  for (const auto& c : chunks) write_chunk(os, c);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::vector<Chunk> read_file(const std::string& path, const char magic[8],
                                    std::uint32_t version) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open file: " + path);
  char got[8];
  is.read(got, sizeof(got));
  if (!is || std::memcmp(got, magic, 8) != 0)
    throw std::runtime_error("unrecognized file (bad magic): " + path);
  const auto v = read_raw<std::uint32_t>(is, path);
  if (v != version)
    throw std::runtime_error("unsupported file version " + std::to_string(v) + ": " + path);
  const auto count = read_raw<std::uint32_t>(is, path);
  std::vector<Chunk> chunks;
  chunks.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) chunks.push_back(read_chunk(is, path));
  return chunks;
}

}  // namespace cyclofem::chunkfile
