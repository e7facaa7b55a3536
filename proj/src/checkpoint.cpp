#include "drf/trainer/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace drf {
namespace {

constexpr char kMagic[8] = {'D', 'R', 'F', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kFormatVersion = 1;

void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(reinterpret_cast<const char*>(p), n);
}
template <class V>
void put(std::string& out, V v) {
  put_bytes(out, &v, sizeof(v));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      fail(ErrorCode::CorruptPayload,
           "checkpoint: truncated at offset " + std::to_string(pos));
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  }
  template <class V>
  V get() {
    V v;
    raw(&v, sizeof(v));
    return v;
  }
};

void put_array(std::string& out, const std::vector<double>& a) {
  put<std::uint64_t>(out, a.size());
  put_bytes(out, a.data(), a.size() * sizeof(double));
}

std::vector<double> get_array(Reader& r) {
  const auto n = r.get<std::uint64_t>();
  r.need(n * sizeof(double));
  std::vector<double> a(n);
  r.raw(a.data(), n * sizeof(double));
  return a;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::string out;
  put_bytes(out, kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kFormatVersion);
  const std::string cfg_text = save_config(ck.config);
  put<std::uint64_t>(out, cfg_text.size());
  out += cfg_text;
  put<std::int64_t>(out, ck.opt_step);
  put<std::int64_t>(out, ck.epoch);
  for (const auto word : ck.rng_state) put<std::uint64_t>(out, word);
  const std::uint64_t arrays =
      ck.params.size() + ck.adam_m1.size() + ck.adam_m2.size();
  put<std::uint64_t>(out, arrays);
  for (const auto& a : ck.params) put_array(out, a);
  for (const auto& a : ck.adam_m1) put_array(out, a);
  for (const auto& a : ck.adam_m2) put_array(out, a);

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "checkpoint: cannot write '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  DRF_CHECK(static_cast<bool>(f), IoError, "checkpoint: short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "checkpoint: cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  Reader r{buf};

  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    fail(ErrorCode::CorruptPayload, "checkpoint: bad magic in '" + path + "'");
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion)
    fail(ErrorCode::VersionMismatch,
         "checkpoint: format version " + std::to_string(version) +
             " (expected " + std::to_string(kFormatVersion) + ")");

  Checkpoint ck;
  const auto cfg_len = r.get<std::uint64_t>();
  r.need(cfg_len);
  const std::string cfg_text(buf.data() + r.pos, cfg_len);
  r.pos += cfg_len;
  ck.config = parse_config_text(cfg_text);
  ck.opt_step = r.get<std::int64_t>();
  ck.epoch = r.get<std::int64_t>();
  for (auto& word : ck.rng_state) word = r.get<std::uint64_t>();
  const auto arrays = r.get<std::uint64_t>();
  DRF_CHECK(arrays % 3 == 0, CorruptPayload,
            "checkpoint: array count not divisible by parameter/moment triple");
  const std::size_t per = arrays / 3;
  for (std::size_t i = 0; i < per; ++i) ck.params.push_back(get_array(r));
  for (std::size_t i = 0; i < per; ++i) ck.adam_m1.push_back(get_array(r));
  for (std::size_t i = 0; i < per; ++i) ck.adam_m2.push_back(get_array(r));
  if (r.pos != buf.size())
    fail(ErrorCode::CorruptPayload,
         "checkpoint: trailing bytes at offset " + std::to_string(r.pos));
  return ck;
}

}  // namespace drf
