#include "orthoq/multiindex.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace orthoq {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("MultiIndex: order must be >= 1");
  for (int v : entries_) {
    if (v < 1) throw std::invalid_argument("MultiIndex: coordinate labels start at 1");
  }
  if (!std::is_sorted(entries_.begin(), entries_.end()))
    throw std::invalid_argument("MultiIndex: entries must be non-decreasing");
}

std::vector<int> MultiIndex::exponents(int d) const {
  std::vector<int> e(static_cast<std::size_t>(d), 0);
  for (int v : entries_) {
    if (v > d) throw std::invalid_argument("MultiIndex: label exceeds dimension");
    e[static_cast<std::size_t>(v - 1)]++;
  }
  return e;
}

MultiIndex MultiIndex::drop_entry(int i) const {
  std::vector<int> e = entries_;
  e.erase(e.begin() + i);
  MultiIndex out;
  out.entries_ = std::move(e);  // stays sorted
  return out;
}

bool MultiIndex::operator<(const MultiIndex& other) const {
  if (entries_.size() != other.entries_.size()) return entries_.size() < other.entries_.size();
  return entries_ < other.entries_;
}

std::string MultiIndex::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) os << ',';
    os << entries_[i];
  }
  os << ')';
  return os.str();
}

std::int64_t factorial_weight(const MultiIndex& m) {
  std::int64_t w = 1;
  std::int64_t run = 1;
  const auto& e = m.entries();
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e[i] == e[i - 1]) {
      ++run;
      w *= run;
    } else {
      run = 1;
    }
  }
  return w;
}

std::int64_t multiset_count(int d, int p) {
  // binomial(d + p - 1, p), exact in 64 bits for the orders we use
  std::int64_t num = 1;
  for (int i = 1; i <= p; ++i) {
    num = num * (d - 1 + i) / i;  // divisibility holds stepwise for binomials
  }
  return num;
}

int IndexFamily::position(const MultiIndex& m) const {
  auto it = positions_.find(m.entries());
  return it == positions_.end() ? -1 : it->second;
}

IndexFamily enumerate_indices(int d_eta, int q) {
  if (d_eta < 1) throw std::invalid_argument("enumerate_indices: d_eta must be >= 1");
  if (q < 1) throw std::invalid_argument("enumerate_indices: q must be >= 1");
  IndexFamily fam;
  fam.d_eta_ = d_eta;
  fam.q_ = q;
  for (int p = 1; p <= q; ++p) {
    fam.block_offsets_.push_back(static_cast<int>(fam.indices_.size()));
    // non-decreasing tuples of length p over {1..d_eta}, lexicographic
    std::vector<int> cur(static_cast<std::size_t>(p), 1);
    int count = 0;
    while (true) {
      fam.indices_.emplace_back(MultiIndex(cur));
      ++count;
      // advance: find rightmost entry < d_eta, bump it, reset the tail to it
      int i = p - 1;
      while (i >= 0 && cur[static_cast<std::size_t>(i)] == d_eta) --i;
      if (i < 0) break;
      int v = ++cur[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < p; ++j) cur[static_cast<std::size_t>(j)] = v;
    }
    fam.block_sizes_.push_back(count);
  }
  for (std::size_t i = 0; i < fam.indices_.size(); ++i)
    fam.positions_[fam.indices_[i].entries()] = static_cast<int>(i);
  return fam;
}

}  // namespace orthoq
