#include "mkmc/views.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace mkmc {

void validate_hidden(Index ell, const IndexSet& hidden) {
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (hidden[i] < 0 || hidden[i] >= ell) {
      std::ostringstream msg;
      msg << "hidden index " << hidden[i] << " outside [0, " << ell << ")";
      throw DimensionError(msg.str());
    }
    if (i > 0 && hidden[i] <= hidden[i - 1]) {
      throw InvalidArgument("hidden index set must be sorted and duplicate-free");
    }
  }
  if (static_cast<Index>(hidden.size()) >= ell) {
    throw InvalidArgument("a view must keep at least one visible object");
  }
}

VisibilityPattern::VisibilityPattern(Index ell, std::vector<IndexSet> hidden)
    : ell_(ell), hidden_(std::move(hidden)) {
  if (ell_ < 1) throw InvalidArgument("pattern needs ell >= 1");
  for (const auto& h : hidden_) validate_hidden(ell_, h);
}

Index VisibilityPattern::num_visible(std::size_t view) const {
  return ell_ - static_cast<Index>(hidden(view).size());
}

bool VisibilityPattern::any_hidden() const {
  return std::any_of(hidden_.begin(), hidden_.end(), [](const IndexSet& h) { return !h.empty(); });
}

std::vector<Index> visible_first_permutation(Index ell, const IndexSet& hidden) {
  std::vector<Index> perm;
  perm.reserve(static_cast<std::size_t>(ell));
  std::vector<bool> is_hidden(static_cast<std::size_t>(ell), false);
  for (Index h : hidden) is_hidden[static_cast<std::size_t>(h)] = true;
  for (Index i = 0; i < ell; ++i) {
    if (!is_hidden[static_cast<std::size_t>(i)]) perm.push_back(i);
  }
  perm.insert(perm.end(), hidden.begin(), hidden.end());
  return perm;
}

PartitionedView partition(const SymmetricMatrix& full, const IndexSet& hidden) {
  const Index ell = full.dim();
  validate_hidden(ell, hidden);
  std::vector<Index> perm = visible_first_permutation(ell, hidden);
  const Index n = ell - static_cast<Index>(hidden.size());
  const Index h = ell - n;

  const Matrix& a = full.matrix();
  Matrix permuted(ell, ell);
  for (Index j = 0; j < ell; ++j) {
    for (Index i = 0; i < ell; ++i) {
      permuted(i, j) = a(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
  }
  return PartitionedView{SymmetricMatrix(permuted.topLeftCorner(n, n)),
                         permuted.topRightCorner(n, h), permuted.bottomRightCorner(h, h),
                         std::move(perm)};
}

SymmetricMatrix unpartition(const PartitionedView& view) {
  const Index n = view.num_visible();
  const Index h = view.hh.rows();
  const Index ell = n + h;
  if (view.hh.cols() != h || view.vh.rows() != n || view.vh.cols() != h ||
      static_cast<Index>(view.perm.size()) != ell) {
    throw DimensionError("unpartition: block dimensions are inconsistent");
  }
  Matrix permuted(ell, ell);
  permuted.topLeftCorner(n, n) = view.vv.matrix();
  permuted.topRightCorner(n, h) = view.vh;
  permuted.bottomLeftCorner(h, n) = view.vh.transpose();
  permuted.bottomRightCorner(h, h) = view.hh;

  Matrix out(ell, ell);
  for (Index j = 0; j < ell; ++j) {
    for (Index i = 0; i < ell; ++i) {
      out(view.perm[static_cast<std::size_t>(i)], view.perm[static_cast<std::size_t>(j)]) =
          permuted(i, j);
    }
  }
  return SymmetricMatrix(out);
}

namespace {

// Uniform integer in [0, bound) from raw 64-bit draws, rejecting the biased low range.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = gen();
    if (x >= threshold) return x % bound;
  }
}

IndexSet draw_hidden(std::mt19937_64& gen, Index ell, Index count) {
  std::vector<Index> idx(static_cast<std::size_t>(ell));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Index>(bounded(gen, static_cast<std::uint64_t>(ell - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  IndexSet hidden(idx.begin(), idx.begin() + count);
  std::sort(hidden.begin(), hidden.end());
  return hidden;
}

}  // namespace

VisibilityPattern random_mask(Index ell, std::size_t num_views, double fraction, std::uint64_t seed,
                              bool shared) {
  if (ell < 1) throw InvalidArgument("random_mask: ell must be >= 1");
  if (num_views < 1) throw InvalidArgument("random_mask: need at least one view");
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw InvalidArgument("random_mask: fraction must lie in [0, 1)");
  }
  const auto count = static_cast<Index>(std::floor(fraction * static_cast<double>(ell)));
  if (count > ell - 1) {
    std::ostringstream msg;
    msg << "random_mask: hiding " << count << " of " << ell << " objects leaves none visible";
    throw InvalidArgument(msg.str());
  }

  std::mt19937_64 gen(seed);
  std::vector<IndexSet> hidden;
  hidden.reserve(num_views);
  for (std::size_t k = 0; k < num_views; ++k) {
    if (shared && k > 0) {
      hidden.push_back(hidden.front());
    } else {
      hidden.push_back(draw_hidden(gen, ell, count));
    }
  }
  return VisibilityPattern(ell, std::move(hidden));
}

SymmetricMatrix apply_mask(const SymmetricMatrix& full, const IndexSet& hidden, Fill fill) {
  const Index ell = full.dim();
  for (Index h : hidden) {
    if (h < 0 || h >= ell) throw DimensionError("apply_mask: hidden index out of range");
  }
  std::vector<bool> is_hidden(static_cast<std::size_t>(ell), false);
  for (Index h : hidden) is_hidden[static_cast<std::size_t>(h)] = true;

  double fill_value = 0.0;
  if (fill == Fill::Mean) {
    double sum = 0.0;
    std::size_t count = 0;
    for (Index j = 0; j < ell; ++j) {
      if (is_hidden[static_cast<std::size_t>(j)]) continue;
      for (Index i = 0; i < ell; ++i) {
        if (is_hidden[static_cast<std::size_t>(i)]) continue;
        sum += full(i, j);
        ++count;
      }
    }
    fill_value = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }

  Matrix out = full.matrix();
  for (Index j = 0; j < ell; ++j) {
    for (Index i = 0; i < ell; ++i) {
      if (is_hidden[static_cast<std::size_t>(i)] || is_hidden[static_cast<std::size_t>(j)]) {
        out(i, j) = fill_value;
      }
    }
  }
  return SymmetricMatrix(out);
}

}  // namespace mkmc
