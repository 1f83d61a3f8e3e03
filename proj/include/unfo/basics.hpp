#pragma once

#include <cstdint>
#include <string>
#include <vector>
#include <stdexcept>

namespace unfo {

// Dynamic bitset sized at construction. Kept deliberately small: the
// engine only needs test/set/or/and/count and equality.
class Bits {
public:
  Bits() : n_(0) {}
  explicit Bits(int n, bool fill = false) : n_(n), w_((n + 63) / 64, fill ? ~0ull : 0ull) {
    trim();
  }
  int size() const { return n_; }
  bool get(int i) const { return (w_[i >> 6] >> (i & 63)) & 1; }
  void set(int i, bool v = true) {
    if (v) w_[i >> 6] |= 1ull << (i & 63);
    else   w_[i >> 6] &= ~(1ull << (i & 63));
  }
  void orWith(const Bits& o) { for (size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i]; }
  void andWith(const Bits& o) { for (size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i]; }
  void andNotWith(const Bits& o) { for (size_t i = 0; i < w_.size(); ++i) w_[i] &= ~o.w_[i]; }
  bool any() const { for (auto x : w_) if (x) return true; return false; }
  int count() const {
    int c = 0;
    for (auto x : w_) c += __builtin_popcountll(x);
    return c;
  }
  bool subsetOf(const Bits& o) const {
    for (size_t i = 0; i < w_.size(); ++i) if (w_[i] & ~o.w_[i]) return false;
    return true;
  }
  bool operator==(const Bits& o) const { return n_ == o.n_ && w_ == o.w_; }
  bool operator!=(const Bits& o) const { return !(*this == o); }
  bool operator<(const Bits& o) const { return n_ != o.n_ ? n_ < o.n_ : w_ < o.w_; }
  const std::vector<uint64_t>& words() const { return w_; }

private:
  void trim() {
    if (n_ & 63) w_.back() &= (1ull << (n_ & 63)) - 1;
  }
  int n_;
  std::vector<uint64_t> w_;
};

// Accumulates human-readable violations; empty means the check passed.
struct CheckReport {
  std::vector<std::string> violations;
  std::vector<std::string> notes;
  bool pass() const { return violations.empty(); }
  void fail(std::string what) { violations.push_back(std::move(what)); }
  void note(std::string what) { notes.push_back(std::move(what)); }
  void merge(const CheckReport& o, const std::string& prefix = "") {
    for (auto& v : o.violations) violations.push_back(prefix + v);
    for (auto& v : o.notes) notes.push_back(prefix + v);
  }
};

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : Error {
  int line, col;
  ParseError(const std::string& what, int l, int c)
      : Error(what + " at " + std::to_string(l) + ":" + std::to_string(c)), line(l), col(c) {}
};

struct CapError : Error {
  explicit CapError(const std::string& what) : Error(what) {}
};

} // namespace unfo
