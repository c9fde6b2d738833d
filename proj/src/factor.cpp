#include "belief_tuner/factor.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <set>

#include "belief_tuner/error.hpp"

namespace belief_tuner {

Factor::Factor() : values_(Eigen::ArrayXd::Ones(1)) {}

Factor::Factor(std::vector<std::size_t> vars, std::vector<std::size_t> cards, Eigen::ArrayXd values)
    : vars_(std::move(vars)), cards_(std::move(cards)), values_(std::move(values)) {
  assert(vars_.size() == cards_.size());
  assert(std::is_sorted(vars_.begin(), vars_.end()));
  std::size_t size = 1;
  for (std::size_t c : cards_) size *= c;
  if (static_cast<std::size_t>(values_.size()) != size) {
    throw Error("factor value count does not match its scope");
  }
}

bool Factor::contains(std::size_t var) const {
  return std::binary_search(vars_.begin(), vars_.end(), var);
}

std::size_t Factor::stride(std::size_t var) const {
  std::size_t s = 1;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i] == var) return s;
    s *= cards_[i];
  }
  return 0;
}

Factor Factor::product(const Factor& other) const {
  std::vector<std::size_t> vars;
  std::vector<std::size_t> cards;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < vars_.size() || j < other.vars_.size()) {
    if (j == other.vars_.size() || (i < vars_.size() && vars_[i] < other.vars_[j])) {
      vars.push_back(vars_[i]);
      cards.push_back(cards_[i++]);
    } else if (i == vars_.size() || other.vars_[j] < vars_[i]) {
      vars.push_back(other.vars_[j]);
      cards.push_back(other.cards_[j++]);
    } else {
      vars.push_back(vars_[i]);
      cards.push_back(cards_[i]);
      ++i;
      ++j;
    }
  }

  const std::size_t k = vars.size();
  std::vector<std::size_t> sa(k), sb(k);
  std::size_t size = 1;
  for (std::size_t d = 0; d < k; ++d) {
    sa[d] = stride(vars[d]);
    sb[d] = other.stride(vars[d]);
    size *= cards[d];
  }

  Eigen::ArrayXd out(static_cast<Eigen::Index>(size));
  std::vector<std::size_t> state(k, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t idx = 0; idx < size; ++idx) {
    out[static_cast<Eigen::Index>(idx)] =
        values_[static_cast<Eigen::Index>(ia)] * other.values_[static_cast<Eigen::Index>(ib)];
    // Odometer increment, first variable fastest.
    for (std::size_t d = 0; d < k; ++d) {
      if (++state[d] < cards[d]) {
        ia += sa[d];
        ib += sb[d];
        break;
      }
      state[d] = 0;
      ia -= (cards[d] - 1) * sa[d];
      ib -= (cards[d] - 1) * sb[d];
    }
  }
  return Factor(std::move(vars), std::move(cards), std::move(out));
}

Factor Factor::sum_out(std::size_t var) const {
  auto it = std::find(vars_.begin(), vars_.end(), var);
  if (it == vars_.end()) return *this;
  const std::size_t pos = static_cast<std::size_t>(it - vars_.begin());
  const std::size_t inner = stride(var);
  const std::size_t card = cards_[pos];
  const std::size_t outer = static_cast<std::size_t>(values_.size()) / (inner * card);

  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(inner * outer));
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t s = 0; s < card; ++s) {
      out.segment(static_cast<Eigen::Index>(o * inner), static_cast<Eigen::Index>(inner)) +=
          values_.segment(static_cast<Eigen::Index>((o * card + s) * inner),
                          static_cast<Eigen::Index>(inner));
    }
  }
  std::vector<std::size_t> vars = vars_;
  std::vector<std::size_t> cards = cards_;
  vars.erase(vars.begin() + static_cast<std::ptrdiff_t>(pos));
  cards.erase(cards.begin() + static_cast<std::ptrdiff_t>(pos));
  return Factor(std::move(vars), std::move(cards), std::move(out));
}

std::vector<std::size_t> min_fill_order(const std::vector<std::vector<std::size_t>>& scopes,
                                        const std::vector<bool>& eliminate) {
  const std::size_t n = eliminate.size();
  std::vector<std::set<std::size_t>> adj(n);
  for (const auto& scope : scopes) {
    for (std::size_t a : scope)
      for (std::size_t b : scope)
        if (a != b) adj[a].insert(b);
  }

  std::vector<bool> pending = eliminate;
  std::vector<std::size_t> order;
  for (;;) {
    std::size_t best = n;
    std::size_t best_fill = std::numeric_limits<std::size_t>::max();
    std::size_t best_degree = std::numeric_limits<std::size_t>::max();
    for (std::size_t v = 0; v < n; ++v) {
      if (!pending[v]) continue;
      std::size_t fill = 0;
      for (auto a = adj[v].begin(); a != adj[v].end(); ++a)
        for (auto b = std::next(a); b != adj[v].end(); ++b)
          if (!adj[*a].count(*b)) ++fill;
      const std::size_t degree = adj[v].size();
      if (fill < best_fill || (fill == best_fill && degree < best_degree)) {
        best = v;
        best_fill = fill;
        best_degree = degree;
      }
    }
    if (best == n) break;

    for (std::size_t a : adj[best])
      for (std::size_t b : adj[best])
        if (a != b) adj[a].insert(b);
    for (std::size_t a : adj[best]) adj[a].erase(best);
    adj[best].clear();
    pending[best] = false;
    order.push_back(best);
  }
  return order;
}

Factor eliminate(std::vector<Factor> factors, const std::vector<std::size_t>& order) {
  for (std::size_t var : order) {
    Factor bucket;
    std::vector<Factor> rest;
    rest.reserve(factors.size());
    bool touched = false;
    for (auto& f : factors) {
      if (f.contains(var)) {
        bucket = touched ? bucket.product(f) : std::move(f);
        touched = true;
      } else {
        rest.push_back(std::move(f));
      }
    }
    if (touched) rest.push_back(bucket.sum_out(var));
    factors = std::move(rest);
  }
  Factor result;
  for (const auto& f : factors) result = result.product(f);
  return result;
}

}  // namespace belief_tuner
