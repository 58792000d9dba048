#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "entroplan/autodiff.hpp"
#include "entroplan/errors.hpp"

namespace entroplan {

inline constexpr uint32_t kCheckpointVersion = 1;

// Little binary writer/reader pair for checkpoint blobs. The blob format is
// magic + version + payload + FNV-1a checksum of the payload.
class BlobWriter {
 public:
  void u8(uint8_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void i64(int64_t v);
  void f64(double v);
  void boolean(bool v) { u8(v ? 1 : 0); }
  void str(const std::string& s);
  void mat(const Mat& m);
  void vec(const Eigen::VectorXd& v);

  const std::string& payload() const { return buf_; }

 private:
  std::string buf_;
};

class BlobReader {
 public:
  explicit BlobReader(std::string payload) : buf_(std::move(payload)) {}

  uint8_t u8();
  uint32_t u32();
  uint64_t u64();
  int64_t i64();
  double f64();
  bool boolean() { return u8() != 0; }
  std::string str();
  Mat mat();
  Eigen::VectorXd vec();
  bool exhausted() const { return pos_ == buf_.size(); }

 private:
  void need(size_t n);
  std::string buf_;
  size_t pos_ = 0;
};

uint64_t fnv1a64_bytes(const std::string& bytes);

// Wraps a payload with magic, version, and checksum and writes it to disk.
void write_checkpoint_file(const std::string& path, const std::string& payload,
                           uint32_t version = kCheckpointVersion);

// Verifies magic, version, and checksum; throws VersionMismatch or
// CorruptBlob. Returns the payload.
std::string read_checkpoint_file(const std::string& path,
                                 uint32_t expected_version =
                                     kCheckpointVersion);

// Parameter group serialization: values plus Adam moments.
void save_params(BlobWriter& w, const std::vector<Param*>& params);
void load_params(BlobReader& r, const std::vector<Param*>& params);

}  // namespace entroplan
