#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace belief_tuner {

/// Dense table over a set of discrete variables.
///
/// `vars` is sorted ascending; values are laid out with the first variable
/// varying fastest, so entry (s_0, ..., s_k) lives at sum_i s_i * stride_i
/// with stride_0 = 1.
class Factor {
 public:
  /// The unit factor (empty scope, value 1).
  Factor();
  Factor(std::vector<std::size_t> vars, std::vector<std::size_t> cards, Eigen::ArrayXd values);

  const std::vector<std::size_t>& vars() const noexcept { return vars_; }
  const std::vector<std::size_t>& cards() const noexcept { return cards_; }
  const Eigen::ArrayXd& values() const noexcept { return values_; }
  Eigen::ArrayXd& values() noexcept { return values_; }

  bool contains(std::size_t var) const;
  std::size_t stride(std::size_t var) const;

  Factor product(const Factor& other) const;
  Factor sum_out(std::size_t var) const;
  double total() const { return values_.sum(); }

 private:
  std::vector<std::size_t> vars_;
  std::vector<std::size_t> cards_;
  Eigen::ArrayXd values_;
};

/// Greedy min-fill elimination order over the interaction graph induced by
/// `scopes`.  Only variables flagged in `eliminate` are ordered.  Ties break
/// on fewer neighbours, then lower index.
std::vector<std::size_t> min_fill_order(const std::vector<std::vector<std::size_t>>& scopes,
                                        const std::vector<bool>& eliminate);

/// Sum-product variable elimination.  Returns the product of all remaining
/// factors once every variable in `order` has been summed out.
Factor eliminate(std::vector<Factor> factors, const std::vector<std::size_t>& order);

}  // namespace belief_tuner
