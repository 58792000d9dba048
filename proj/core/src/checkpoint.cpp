#include "entroplan/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace entroplan {

namespace {
constexpr char kMagic[8] = {'E', 'P', 'L', 'C', 'K', 'P', 'T', '\0'};
}

void BlobWriter::u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }

void BlobWriter::u32(uint32_t v) {
  char raw[4];
  std::memcpy(raw, &v, 4);
  buf_.append(raw, 4);
}

void BlobWriter::u64(uint64_t v) {
  char raw[8];
  std::memcpy(raw, &v, 8);
  buf_.append(raw, 8);
}

void BlobWriter::i64(int64_t v) { u64(static_cast<uint64_t>(v)); }

void BlobWriter::f64(double v) {
  char raw[8];
  std::memcpy(raw, &v, 8);
  buf_.append(raw, 8);
}

void BlobWriter::str(const std::string& s) {
  u64(s.size());
  buf_.append(s);
}

void BlobWriter::mat(const Mat& m) {
  u64(static_cast<uint64_t>(m.rows()));
  u64(static_cast<uint64_t>(m.cols()));
  buf_.append(reinterpret_cast<const char*>(m.data()),
              sizeof(double) * m.size());
}

void BlobWriter::vec(const Eigen::VectorXd& v) {
  u64(static_cast<uint64_t>(v.size()));
  buf_.append(reinterpret_cast<const char*>(v.data()),
              sizeof(double) * v.size());
}

void BlobReader::need(size_t n) {
  if (pos_ + n > buf_.size()) throw CorruptBlob("checkpoint payload truncated");
}

uint8_t BlobReader::u8() {
  need(1);
  return static_cast<uint8_t>(buf_[pos_++]);
}

uint32_t BlobReader::u32() {
  need(4);
  uint32_t v;
  std::memcpy(&v, buf_.data() + pos_, 4);
  pos_ += 4;
  return v;
}

uint64_t BlobReader::u64() {
  need(8);
  uint64_t v;
  std::memcpy(&v, buf_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

int64_t BlobReader::i64() { return static_cast<int64_t>(u64()); }

double BlobReader::f64() {
  need(8);
  double v;
  std::memcpy(&v, buf_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

std::string BlobReader::str() {
  const uint64_t n = u64();
  need(n);
  std::string s = buf_.substr(pos_, n);
  pos_ += n;
  return s;
}

Mat BlobReader::mat() {
  const uint64_t rows = u64();
  const uint64_t cols = u64();
  const size_t bytes = sizeof(double) * rows * cols;
  need(bytes);
  Mat m(rows, cols);
  std::memcpy(m.data(), buf_.data() + pos_, bytes);
  pos_ += bytes;
  return m;
}

Eigen::VectorXd BlobReader::vec() {
  const uint64_t n = u64();
  const size_t bytes = sizeof(double) * n;
  need(bytes);
  Eigen::VectorXd v(n);
  std::memcpy(v.data(), buf_.data() + pos_, bytes);
  pos_ += bytes;
  return v;
}

uint64_t fnv1a64_bytes(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_checkpoint_file(const std::string& path, const std::string& payload,
                           uint32_t version) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for write: " + path);
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&version), 4);
  const uint64_t size = payload.size();
  out.write(reinterpret_cast<const char*>(&size), 8);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const uint64_t sum = fnv1a64_bytes(payload);
  out.write(reinterpret_cast<const char*>(&sum), 8);
}

std::string read_checkpoint_file(const std::string& path,
                                 uint32_t expected_version) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw CorruptBlob("checkpoint magic missing");
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (version != expected_version)
    throw VersionMismatch("checkpoint version " + std::to_string(version) +
                          ", expected " + std::to_string(expected_version));
  uint64_t size = 0;
  in.read(reinterpret_cast<char*>(&size), 8);
  std::string payload(size, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(size));
  if (in.gcount() != static_cast<std::streamsize>(size))
    throw CorruptBlob("checkpoint payload truncated");
  uint64_t sum = 0;
  in.read(reinterpret_cast<char*>(&sum), 8);
  if (in.gcount() != 8 || sum != fnv1a64_bytes(payload))
    throw CorruptBlob("checkpoint checksum mismatch");
  return payload;
}

void save_params(BlobWriter& w, const std::vector<Param*>& params) {
  w.u64(params.size());
  for (const Param* p : params) {
    w.str(p->name);
    w.mat(p->value);
    w.mat(p->adam_m);
    w.mat(p->adam_v);
  }
}

void load_params(BlobReader& r, const std::vector<Param*>& params) {
  const uint64_t n = r.u64();
  if (n != params.size()) throw CorruptBlob("parameter count mismatch");
  for (Param* p : params) {
    const std::string name = r.str();
    if (name != p->name) throw CorruptBlob("parameter order mismatch: " + name);
    p->value = r.mat();
    p->adam_m = r.mat();
    p->adam_v = r.mat();
    p->grad = Mat::Zero(p->value.rows(), p->value.cols());
  }
}

}  // namespace entroplan
