#include "cxrnet/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace cxrnet {
namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'X', 'R', 'N'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }

  template <typename U>
  void scalar(U value) {
    static_assert(std::is_trivially_copyable_v<U>);
    std::uint8_t raw[sizeof(U)];
    std::memcpy(raw, &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw, raw + sizeof(U));
    }
    bytes(raw, sizeof(U));
  }

  void tensor(const Tensor<float>& t) {
    scalar<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t extent : t.shape()) {
      scalar<std::uint32_t>(static_cast<std::uint32_t>(extent));
    }
    if constexpr (std::endian::native == std::endian::little) {
      bytes(t.raw(), t.size() * sizeof(float));
    } else {
      for (float v : t.data()) scalar(v);
    }
  }

  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  void bytes(void* dst, std::size_t n) {
    if (n > data_.size() - pos_) throw FormatError("checkpoint is truncated");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  template <typename U>
  U scalar() {
    std::uint8_t raw[sizeof(U)];
    bytes(raw, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw, raw + sizeof(U));
    }
    U value;
    std::memcpy(&value, raw, sizeof(U));
    return value;
  }

  Tensor<float> tensor(const Shape& expected) {
    const auto rank = scalar<std::uint32_t>();
    if (rank != expected.size()) throw FormatError("checkpoint tensor rank mismatch");
    Shape shape(rank);
    for (auto& extent : shape) extent = scalar<std::uint32_t>();
    if (shape != expected) {
      throw FormatError("checkpoint tensor " + to_string(shape) +
                        " does not match descriptor " + to_string(expected));
    }
    Tensor<float> t(shape);
    if constexpr (std::endian::native == std::endian::little) {
      bytes(t.raw(), t.size() * sizeof(float));
    } else {
      for (float& v : t.data()) v = scalar<float>();
    }
    return t;
  }

  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const std::uint8_t* p = bytes.data();
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_checkpoint(const Network<float>& model,
                                            const AdamState<float>* optimizer,
                                            std::uint32_t epoch,
                                            std::uint64_t seed) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.scalar(kCheckpointVersion);
  const std::string descriptor = model.spec().to_json();
  w.scalar(static_cast<std::uint32_t>(descriptor.size()));
  w.bytes(descriptor.data(), descriptor.size());

  const auto params = model.parameters();
  w.scalar(static_cast<std::uint32_t>(params.size()));
  for (const Tensor<float>* p : params) w.tensor(*p);

  w.scalar(epoch);
  w.scalar(seed);
  w.scalar<std::uint8_t>(optimizer ? 1 : 0);
  if (optimizer) {
    w.scalar<std::int64_t>(optimizer->step);
    w.scalar(optimizer->learning_rate);
    w.scalar(optimizer->beta1);
    w.scalar(optimizer->beta2);
    w.scalar(optimizer->epsilon);
    w.scalar(static_cast<std::uint32_t>(optimizer->m.size() + optimizer->v.size()));
    for (const auto& m : optimizer->m) w.tensor(m);
    for (const auto& v : optimizer->v) w.tensor(v);
  }
  w.scalar(crc32(w.buffer()));
  return std::move(w.buffer());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw FormatError("checkpoint is truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint (bad magic bytes)");
  }
  Reader header(bytes.subspan(4, 4));
  const auto version = header.scalar<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " (this build reads version " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = bytes.size() - 4;
  Reader trailer(bytes.subspan(body));
  const auto stored_crc = trailer.scalar<std::uint32_t>();
  if (crc32(bytes.first(body)) != stored_crc) {
    throw FormatError("checkpoint checksum mismatch (file corrupt or truncated)");
  }

  Reader r(bytes.first(body));
  std::uint8_t skip[8];
  r.bytes(skip, 8);  // magic + version
  const auto descriptor_len = r.scalar<std::uint32_t>();
  if (descriptor_len > body) throw FormatError("checkpoint is truncated");
  std::string descriptor(descriptor_len, '\0');
  r.bytes(descriptor.data(), descriptor_len);

  Checkpoint cp{Network<float>(ModelSpec::from_json(descriptor)), std::nullopt, 0, 0};
  const auto params = cp.model.parameters();
  if (r.scalar<std::uint32_t>() != params.size()) {
    throw FormatError("checkpoint parameter count mismatch");
  }
  for (Tensor<float>* p : params) *p = r.tensor(p->shape());

  cp.epoch = r.scalar<std::uint32_t>();
  cp.seed = r.scalar<std::uint64_t>();
  const auto has_optimizer = r.scalar<std::uint8_t>();
  if (has_optimizer > 1) throw FormatError("checkpoint optimizer flag invalid");
  if (has_optimizer) {
    AdamState<float> adam;
    adam.step = r.scalar<std::int64_t>();
    adam.learning_rate = r.scalar<double>();
    adam.beta1 = r.scalar<double>();
    adam.beta2 = r.scalar<double>();
    adam.epsilon = r.scalar<double>();
    if (r.scalar<std::uint32_t>() != 2 * params.size()) {
      throw FormatError("checkpoint optimizer moment count mismatch");
    }
    for (const Tensor<float>* p : params) adam.m.push_back(r.tensor(p->shape()));
    for (const Tensor<float>* p : params) adam.v.push_back(r.tensor(p->shape()));
    cp.optimizer = std::move(adam);
  }
  if (r.position() != body) throw FormatError("checkpoint has trailing bytes");
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Network<float>& model,
                     const AdamState<float>* optimizer, std::uint32_t epoch,
                     std::uint64_t seed) {
  const std::vector<std::uint8_t> bytes =
      encode_checkpoint(model, optimizer, epoch, seed);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!in) throw FormatError("cannot read checkpoint " + path.string());
  return decode_checkpoint(bytes);
}

}  // namespace cxrnet
