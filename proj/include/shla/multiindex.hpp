#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace shla {

/// Strictly increasing index tuples (antisymmetric component storage).
using Index = std::vector<int>;

/// All strictly increasing l-tuples from {0,...,n-1}, lexicographic.
inline std::vector<Index> combinations(int n, int l) {
  std::vector<Index> out;
  if (l < 0 || l > n) return out;
  Index cur(l);
  // iterative enumeration
  for (int i = 0; i < l; ++i) cur[i] = i;
  if (l == 0) {
    out.push_back({});
    return out;
  }
  for (;;) {
    out.push_back(cur);
    int i = l - 1;
    while (i >= 0 && cur[i] == n - l + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < l; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

inline int combination_rank(const std::vector<Index>& all, const Index& idx) {
  auto it = std::find(all.begin(), all.end(), idx);
  return it == all.end() ? -1 : static_cast<int>(it - all.begin());
}

/// Insert j into sorted tuple; returns parity sign of the insertion and the
/// merged tuple, or sign 0 if j already present.
inline int insert_index(const Index& idx, int j, Index& out) {
  int pos = 0;
  for (int v : idx) {
    if (v == j) return 0;
    if (v < j) ++pos;
  }
  out = idx;
  out.insert(out.begin() + pos, j);
  return (pos % 2 == 0) ? 1 : -1;
}

/// Sign of the permutation sorting `perm` (which must have distinct entries),
/// or 0 when entries repeat.
inline int permutation_sign(Index perm) {
  int sign = 1;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t j = i + 1; j < perm.size(); ++j) {
      if (perm[i] == perm[j]) return 0;
      if (perm[i] > perm[j]) sign = -sign;
    }
  }
  return sign;
}

struct Split {
  Index left, right;
  int sign;
};

/// All (l, |idx|-l) unshuffles of a sorted tuple with their Koszul signs.
inline std::vector<Split> unshuffles(const Index& idx, int l) {
  std::vector<Split> out;
  int n = static_cast<int>(idx.size());
  if (l < 0 || l > n) return out;
  for (const Index& pick : combinations(n, l)) {
    Split s;
    std::vector<bool> taken(n, false);
    for (int p : pick) {
      s.left.push_back(idx[p]);
      taken[p] = true;
    }
    for (int i = 0; i < n; ++i)
      if (!taken[i]) s.right.push_back(idx[i]);
    Index perm = s.left;
    perm.insert(perm.end(), s.right.begin(), s.right.end());
    s.sign = permutation_sign(perm);
    out.push_back(std::move(s));
  }
  return out;
}

/// All permutations of {0,...,n-1}.
inline std::vector<Index> all_permutations(int n) {
  Index base(n);
  for (int i = 0; i < n; ++i) base[i] = i;
  std::vector<Index> out;
  do {
    out.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  return out;
}

}  // namespace shla
