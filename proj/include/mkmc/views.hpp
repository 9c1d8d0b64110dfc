#pragma once

#include <cstdint>
#include <vector>

#include "mkmc/matrix.hpp"

namespace mkmc {

/// Sorted, duplicate-free object indices.
using IndexSet = std::vector<Index>;

/**
 * Which objects are hidden in each view.
 *
 * Invariants: every index lies in [0, ell), each set is sorted and
 * duplicate-free, and every view keeps at least one visible object.
 */
class VisibilityPattern {
 public:
  VisibilityPattern(Index ell, std::vector<IndexSet> hidden);

  Index ell() const { return ell_; }
  std::size_t num_views() const { return hidden_.size(); }
  const IndexSet& hidden(std::size_t view) const { return hidden_.at(view); }
  const std::vector<IndexSet>& hidden_sets() const { return hidden_; }
  Index num_visible(std::size_t view) const;
  bool any_hidden() const;

  friend bool operator==(const VisibilityPattern&, const VisibilityPattern&) = default;

 private:
  Index ell_;
  std::vector<IndexSet> hidden_;
};

/// Throws unless `hidden` is sorted, duplicate-free, inside [0, ell) and leaves one object visible.
void validate_hidden(Index ell, const IndexSet& hidden);

/**
 * A matrix laid out visible-first, hidden-last.
 *
 * perm[p] is the original index of the object at permuted position p.
 * The first n = vv.dim() positions are the visible objects in ascending order.
 */
struct PartitionedView {
  SymmetricMatrix vv;
  Matrix vh;  ///< n x h
  Matrix hh;  ///< h x h, symmetric
  std::vector<Index> perm;

  Index num_visible() const { return vv.dim(); }
  Index num_hidden() const { return hh.rows(); }
  Index ell() const { return num_visible() + num_hidden(); }
};

/// Visible-first ordering of {0, ..., ell-1} for the given hidden set.
std::vector<Index> visible_first_permutation(Index ell, const IndexSet& hidden);

PartitionedView partition(const SymmetricMatrix& full, const IndexSet& hidden);

/// Inverse of partition(). Throws DimensionError on inconsistent blocks.
SymmetricMatrix unpartition(const PartitionedView& view);

/**
 * Draws floor(fraction * ell) hidden objects per view, without replacement.
 *
 * Sampling is a partial Fisher-Yates shuffle driven by std::mt19937_64 seeded
 * with `seed`; bounded integers use rejection sampling on the raw 64-bit
 * output, so patterns are reproducible across platforms. Views are drawn in
 * order from the same stream. With `shared` set, one draw is reused for every view.
 */
VisibilityPattern random_mask(Index ell, std::size_t num_views, double fraction, std::uint64_t seed,
                              bool shared = false);

enum class Fill { Zero, Mean };

/**
 * Replaces every entry whose row or column is hidden.
 *
 * Fill::Mean uses the scalar mean of the visible block. The result can be
 * indefinite; it is a baseline, not a completion.
 */
SymmetricMatrix apply_mask(const SymmetricMatrix& full, const IndexSet& hidden, Fill fill);

}  // namespace mkmc
