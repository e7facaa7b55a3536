#include "drf/tasks/mnist.hpp"

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "drf/core/error.hpp"

namespace drf {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;
constexpr std::size_t kPixels = 28 * 28;

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in)
    fail(ErrorCode::TruncatedFile, "idx: '" + path + "' truncated in header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::vector<std::uint8_t> read_idx(const std::string& path,
                                   std::uint32_t want_magic,
                                   std::size_t item_bytes, std::size_t* count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "idx: cannot open '" + path + "'");
  const std::uint32_t magic = read_be32(in, path);
  if (magic != want_magic) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "0x%08x (expected 0x%08x)", magic, want_magic);
    fail(ErrorCode::BadMagic, "idx: '" + path + "' bad magic " + buf);
  }
  const std::uint32_t n = read_be32(in, path);
  if (want_magic == kImageMagic) {
    const std::uint32_t rows = read_be32(in, path);
    const std::uint32_t cols = read_be32(in, path);
    DRF_CHECK(rows == 28 && cols == 28, InvalidValue,
              "idx: '" + path + "' unexpected image dims");
  }
  std::vector<std::uint8_t> data(static_cast<std::size_t>(n) * item_bytes);
  in.read(reinterpret_cast<char*>(data.data()), data.size());
  if (static_cast<std::size_t>(in.gcount()) != data.size())
    fail(ErrorCode::TruncatedFile, "idx: '" + path + "' truncated payload");
  *count = n;
  return data;
}

MnistSplit load_split(const std::string& dir, const std::string& images,
                      const std::string& labels) {
  MnistSplit split;
  std::size_t n_images = 0, n_labels = 0;
  const auto img = read_idx(dir + "/" + images, kImageMagic, kPixels, &n_images);
  const auto lab = read_idx(dir + "/" + labels, kLabelMagic, 1, &n_labels);
  DRF_CHECK(n_images == n_labels, InvalidValue,
            "idx: image/label counts disagree in " + dir);
  split.count = n_images;
  split.pixels.resize(img.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    split.pixels[i] = static_cast<float>(img[i]) / 255.0f;
  split.labels = lab;
  return split;
}

}  // namespace

MnistData load_mnist(const std::string& dir) {
  MnistData data;
  data.train = load_split(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte");
  data.test = load_split(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
  return data;
}

std::vector<std::uint32_t> pixel_permutation(std::uint64_t seed) {
  std::vector<std::uint32_t> perm(kPixels);
  for (std::uint32_t i = 0; i < kPixels; ++i) perm[i] = i;
  if (seed == 0) return perm;  // identity sentinel
  Rng rng(seed);
  for (std::size_t i = kPixels; i > 1; --i)
    std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
  return perm;
}

LabeledSequenceBatch mnist_batch(const MnistSplit& split, std::size_t first,
                                 std::size_t count,
                                 const std::vector<std::uint32_t>* perm) {
  DRF_CHECK(first + count <= split.count, InvalidValue,
            "mnist_batch: range exceeds split size");
  LabeledSequenceBatch batch{RealSequence(count, 1, kPixels), {}};
  batch.labels.resize(count);
  for (std::size_t s = 0; s < count; ++s) {
    const float* src = split.pixels.data() + (first + s) * kPixels;
    double* dst = batch.inputs.row(s, 0);
    if (perm) {
      for (std::size_t t = 0; t < kPixels; ++t) dst[t] = src[(*perm)[t]];
    } else {
      for (std::size_t t = 0; t < kPixels; ++t) dst[t] = src[t];
    }
    batch.labels[s] = split.labels[first + s];
  }
  return batch;
}

namespace {

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
  z_stream zs{};
  DRF_CHECK(inflateInit2(&zs, 16 + MAX_WBITS) == Z_OK, IoError,
            "gunzip: inflateInit failed");
  std::vector<std::uint8_t> out;
  out.resize(in.size() * 4 + 1024);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::size_t written = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = out.data() + written;
    zs.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&zs, Z_NO_FLUSH);
    written = out.size() - zs.avail_out;
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      fail(ErrorCode::IoError, "gunzip: corrupt stream");
    }
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

}  // namespace

void fetch_mnist(const std::string& mirror, const std::string& dir);

}  // namespace drf

// httplib pulls in a lot; keep it isolated at the end of this TU.
#define CPPHTTPLIB_OPENSSL_SUPPORT_DISABLED
#include <httplib.h>

namespace drf {

void fetch_mnist(const std::string& mirror, const std::string& dir) {
  struct Item {
    const char* gz;
    const char* out;
    std::size_t payload;  // expected decompressed size
  };
  const Item items[] = {
      {"train-images-idx3-ubyte.gz", "train-images-idx3-ubyte", 16 + 60000 * kPixels},
      {"train-labels-idx1-ubyte.gz", "train-labels-idx1-ubyte", 8 + 60000},
      {"t10k-images-idx3-ubyte.gz", "t10k-images-idx3-ubyte", 16 + 10000 * kPixels},
      {"t10k-labels-idx1-ubyte.gz", "t10k-labels-idx1-ubyte", 8 + 10000},
  };

  std::string host = mirror, base = "/";
  if (host.rfind("https://", 0) == 0) host = host.substr(8);
  if (host.rfind("http://", 0) == 0) host = host.substr(7);
  const auto slash = host.find('/');
  if (slash != std::string::npos) {
    base = host.substr(slash);
    host = host.substr(0, slash);
  }
  if (base.empty() || base.back() != '/') base += '/';

  std::filesystem::create_directories(dir);
  httplib::Client client(host, 80);
  client.set_follow_location(true);
  for (const auto& item : items) {
    const std::string target = dir + "/" + item.out;
    if (std::filesystem::exists(target) &&
        std::filesystem::file_size(target) == item.payload)
      continue;
    auto res = client.Get(base + item.gz);
    if (!res || res->status != 200)
      fail(ErrorCode::IoError, std::string("fetch: GET ") + item.gz + " from " +
                                   host + " failed");
    const std::vector<std::uint8_t> raw(res->body.begin(), res->body.end());
    const auto flat = gunzip(raw);
    if (flat.size() != item.payload)
      fail(ErrorCode::IoError, std::string("fetch: ") + item.out +
                                   " payload length " + std::to_string(flat.size()) +
                                   " != expected " + std::to_string(item.payload));
    std::ofstream out(target, std::ios::binary);
    out.write(reinterpret_cast<const char*>(flat.data()), flat.size());
    DRF_CHECK(static_cast<bool>(out), IoError, "fetch: cannot write " + target);
  }
}

}  // namespace drf
