#ifndef ORTHOQ_MULTIINDEX_HPP
#define ORTHOQ_MULTIINDEX_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace orthoq {

/// A partial-derivative label: coordinate labels (m_1 <= ... <= m_p),
/// each in {1,...,d}, stored with multiplicity. Order p = number of entries.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);

  int order() const { return static_cast<int>(entries_.size()); }
  const std::vector<int>& entries() const { return entries_; }
  int operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }

  /// Exponent-vector form: count of each coordinate 1..d.
  std::vector<int> exponents(int d) const;

  /// Index with the i-th entry removed (used by nested differentiation).
  MultiIndex drop_entry(int i) const;

  bool operator==(const MultiIndex& other) const { return entries_ == other.entries_; }
  bool operator<(const MultiIndex& other) const;

  std::string to_string() const;

 private:
  std::vector<int> entries_;  // sorted non-decreasing, values in 1..d
};

/// prod_r (multiplicity of coordinate r)! — the Taylor weight of the index.
std::int64_t factorial_weight(const MultiIndex& m);

/// Canonical enumeration of all unique partial-derivative labels up to order q
/// over d_eta coordinates: graded by order, lexicographic within each order.
class IndexFamily {
 public:
  IndexFamily() = default;

  int d_eta() const { return d_eta_; }
  int max_order() const { return q_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const MultiIndex& at(int i) const { return indices_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& block_sizes() const { return block_sizes_; }
  /// Flat offset of the order-p block, p in 1..q.
  int block_offset(int p) const { return block_offsets_[static_cast<std::size_t>(p - 1)]; }
  /// Flat position of an index; -1 if not present.
  int position(const MultiIndex& m) const;

 private:
  friend IndexFamily enumerate_indices(int d_eta, int q);
  int d_eta_ = 0;
  int q_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<int> block_sizes_;
  std::vector<int> block_offsets_;
  std::map<std::vector<int>, int> positions_;
};

/// Builds the canonical family. Throws std::invalid_argument for d_eta < 1 or q < 1.
IndexFamily enumerate_indices(int d_eta, int q);

/// binomial(d + p - 1, p): number of unique order-p partial derivatives.
std::int64_t multiset_count(int d, int p);

}  // namespace orthoq

#endif
