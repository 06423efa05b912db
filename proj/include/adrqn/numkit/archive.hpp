#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adrqn/numkit/tensor.hpp"

namespace adrqn::numkit {

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named tensors stored as a text header followed by little-endian doubles.
///
///   numkit-archive 1
///   tensors <count>
///   <name> <rank> <d0> <d1> ...     (one line per tensor, in payload order)
///   data
///   <raw payload: 8 bytes per element, little-endian IEEE-754>
///
/// Names may not contain whitespace. Round trips are bit-exact.
class TensorArchive {
 public:
  static constexpr const char* kMagic = "numkit-archive";
  static constexpr int kVersion = 1;

  void put(const std::string& name, Tensor tensor) {
    if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos) {
      throw ArchiveError("archive: invalid tensor name '" + name + "'");
    }
    if (tensor.empty()) throw ArchiveError("archive: refusing to store empty tensor '" + name + "'");
    auto [it, inserted] = index_.try_emplace(name, entries_.size());
    if (inserted) {
      entries_.emplace_back(name, std::move(tensor));
    } else {
      entries_[it->second].second = std::move(tensor);
    }
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const Tensor& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ArchiveError("archive: missing tensor '" + name + "'");
    return entries_[it->second].second;
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }

  void write(std::ostream& os) const {
    os << kMagic << ' ' << kVersion << '\n' << "tensors " << entries_.size() << '\n';
    for (const auto& [name, t] : entries_) {
      os << name << ' ' << t.rank();
      for (std::size_t d : t.shape()) os << ' ' << d;
      os << '\n';
    }
    os << "data\n";
    std::vector<char> buffer;
    for (const auto& [name, t] : entries_) {
      buffer.resize(t.size() * 8);
      for (std::size_t i = 0; i < t.size(); ++i) encode(t[i], buffer.data() + i * 8);
      os.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    }
    if (!os) throw ArchiveError("archive: write failed");
  }

  static TensorArchive read(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != kMagic || version != kVersion) {
      throw ArchiveError("archive: bad header (expected '" + std::string(kMagic) + " 1')");
    }
    std::string word;
    std::size_t count = 0;
    if (!(is >> word >> count) || word != "tensors") throw ArchiveError("archive: missing tensor count");
    std::vector<std::pair<std::string, Shape>> layout;
    for (std::size_t k = 0; k < count; ++k) {
      std::string name;
      std::size_t rank = 0;
      if (!(is >> name >> rank)) throw ArchiveError("archive: truncated header");
      Shape shape(rank);
      for (auto& d : shape) {
        if (!(is >> d)) throw ArchiveError("archive: truncated shape for '" + name + "'");
      }
      layout.emplace_back(std::move(name), std::move(shape));
    }
    if (!(is >> word) || word != "data") throw ArchiveError("archive: missing data marker");
    if (is.get() != '\n') throw ArchiveError("archive: malformed data marker");

    TensorArchive archive;
    std::vector<char> buffer;
    for (auto& [name, shape] : layout) {
      const std::size_t n = shape_size(shape);
      buffer.resize(n * 8);
      if (!is.read(buffer.data(), static_cast<std::streamsize>(buffer.size()))) {
        throw ArchiveError("archive: truncated payload for '" + name + "'");
      }
      std::vector<double> data(n);
      for (std::size_t i = 0; i < n; ++i) data[i] = decode(buffer.data() + i * 8);
      archive.put(name, Tensor(std::move(shape), std::move(data)));
    }
    return archive;
  }

  void save(const std::filesystem::path& path) const {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw ArchiveError("archive: cannot open " + tmp.string());
      write(os);
    }
    std::filesystem::rename(tmp, path);
  }

  static TensorArchive load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ArchiveError("archive: cannot open " + path.string());
    return read(is);
  }

 private:
  static void encode(double v, char* out) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out[b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  static double decode(const char* in) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[b])) << (8 * b);
    return std::bit_cast<double>(bits);
  }

  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace adrqn::numkit
