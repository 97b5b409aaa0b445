#include "kinpose/depth_image.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace kinpose {

namespace {
constexpr char kMagic[4] = {'D', 'P', 'T', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v), (unsigned char)(v >> 8),
                        (unsigned char)(v >> 16), (unsigned char)(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}
}  // namespace

void write_dpt(const std::string& path, const DepthImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, 4);
  put_u32(out, std::uint32_t(img.width()));
  put_u32(out, std::uint32_t(img.height()));
  put_u32(out, 0);  // reserved
  static_assert(sizeof(float) == 4);
  // Little-endian host assumed; the toolkit targets x86-64/aarch64.
  out.write(reinterpret_cast<const char*>(img.data().data()),
            std::streamsize(img.data().size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path);
}

DepthImage read_dpt(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a DPT1 file: " + path);
  const std::uint32_t w = get_u32(in), h = get_u32(in);
  get_u32(in);  // reserved
  if (w == 0 || h == 0 || w > 1u << 16 || h > 1u << 16)
    throw std::runtime_error("implausible raster size in " + path);
  std::vector<float> data(size_t(w) * h);
  in.read(reinterpret_cast<char*>(data.data()),
          std::streamsize(data.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated DPT1 file: " + path);
  return DepthImage(int(w), int(h), std::move(data));
}

}  // namespace kinpose
