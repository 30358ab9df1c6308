#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

#include "cvrplab/errors.hpp"
#include "cvrplab/neural.hpp"

namespace cvrplab {

// Layout (little endian):
//   "CVRPLABW" u32 version
//   i32 embed_dim, heads, decoder_layers, ff_dim
//   u32 tensor count, then per tensor: u32 name length, name, u64 rows, u64 cols, f64 values

namespace {

constexpr char kMagic[8] = {'C', 'V', 'R', 'P', 'L', 'A', 'B', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw ParseError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) throw ParseError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

std::int32_t get_i32(std::istream& in) { return static_cast<std::int32_t>(get_u32(in)); }

}  // namespace

void save_checkpoint(const PolicyParams& params, std::ostream& out) {
  params.validate();
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  for (int v : {params.shape.embed_dim, params.shape.heads, params.shape.decoder_layers, params.shape.ff_dim})
    put_u32(out, static_cast<std::uint32_t>(v));
  std::uint32_t count = 0;
  params.for_each_tensor([&count](const std::string&, const Matrix&) { ++count; });
  put_u32(out, count);
  params.for_each_tensor([&out](const std::string& name, const Matrix& m) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    for (double v : m.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  });
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_checkpoint(params, out);
}

PolicyParams load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kMagic))
    throw ParseError("not a cvrplab checkpoint");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  NetworkShape shape;
  shape.embed_dim = get_i32(in);
  shape.heads = get_i32(in);
  shape.decoder_layers = get_i32(in);
  shape.ff_dim = get_i32(in);
  if (shape.embed_dim < 1 || shape.heads < 1 || shape.decoder_layers < 1 || shape.ff_dim < 1 ||
      shape.embed_dim > 4096 || shape.decoder_layers > 64 || shape.ff_dim > 65536 ||
      shape.embed_dim % shape.heads != 0)
    throw ParseError("checkpoint has an invalid network shape");
  PolicyParams params = PolicyParams::zeros(shape);

  std::uint32_t expected = 0;
  params.for_each_tensor([&expected](const std::string&, const Matrix&) { ++expected; });
  const std::uint32_t count = get_u32(in);
  if (count != expected)
    throw ParseError("checkpoint holds " + std::to_string(count) + " tensors, expected " + std::to_string(expected));

  params.for_each_tensor([&in](const std::string& name, Matrix& m) {
    const std::uint32_t len = get_u32(in);
    if (len > 256) throw ParseError("checkpoint tensor name too long");
    std::string stored(len, '\0');
    if (!in.read(stored.data(), len)) throw ParseError("checkpoint truncated");
    if (stored != name) throw ParseError("checkpoint tensor " + stored + " where " + name + " was expected");
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    if (rows != m.rows() || cols != m.cols())
      throw ParseError("checkpoint tensor " + name + " has shape " + std::to_string(rows) + "x" + std::to_string(cols));
    for (double& v : m.values()) v = std::bit_cast<double>(get_u64(in));
  });
  params.validate();
  return params;
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace cvrplab
