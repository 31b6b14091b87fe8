#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskroute {

std::uint32_t crc32(const void* data, std::size_t len,
                    std::uint32_t seed = 0);

// Little-endian binary encoder for artifact payloads. Doubles are written as
// their IEEE-754 bit patterns so round-trips are bit-exact.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>(v >> (8 * i)));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>(v >> (8 * i)));
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(const std::string& s) {
    u64(s.size());
    buf_.append(s);
  }

  void vec(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }

  void mat(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }

  void int_vec(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) i64(x);
  }

  const std::string& buffer() const { return buf_; }
  std::string take() && { return std::move(buf_); }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string data) : buf_(std::move(data)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(byte()); }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::uint64_t n = u64();
    check(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  Eigen::VectorXd vec() {
    const std::uint64_t n = u64();
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f64();
    return v;
  }

  Eigen::MatrixXd mat() {
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows),
                      static_cast<Eigen::Index>(cols));
    for (std::uint64_t r = 0; r < rows; ++r)
      for (std::uint64_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f64();
    return m;
  }

  std::vector<int> int_vec() {
    const std::uint64_t n = u64();
    std::vector<int> v(n);
    for (std::uint64_t i = 0; i < n; ++i) v[i] = static_cast<int>(i64());
    return v;
  }

  bool at_end() const { return pos_ == buf_.size(); }

  void expect_end() const {
    if (!at_end()) throw std::runtime_error("artifact payload has trailing bytes");
  }

 private:
  unsigned char byte() {
    check(1);
    return static_cast<unsigned char>(buf_[pos_++]);
  }

  void check(std::uint64_t n) const {
    if (pos_ + n > buf_.size())
      throw std::runtime_error("artifact payload truncated");
  }

  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace taskroute
