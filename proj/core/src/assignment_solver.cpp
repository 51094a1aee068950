#include "fleetsim/assignment_solver.h"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

namespace fleetsim {

Millis assignment_objective(const AssignmentProblem& problem, const std::vector<int>& choice) {
  std::vector<char> covered(problem.request_weight.size(), 0);
  Millis total = 0;
  for (std::size_t v = 0; v < choice.size(); ++v) {
    if (choice[v] < 0) continue;
    const auto& c = problem.vehicle_candidates[v][static_cast<std::size_t>(choice[v])];
    total += c.cost;
    for (int r : c.requests) {
      if (covered[static_cast<std::size_t>(r)]) return kInfiniteMillis;
      covered[static_cast<std::size_t>(r)] = 1;
    }
  }
  for (std::size_t r = 0; r < covered.size(); ++r)
    if (!covered[r]) total += problem.request_weight[r];
  return total;
}

namespace {

class ComponentSearch {
 public:
  ComponentSearch(const AssignmentProblem& p, std::vector<int> vehicles, std::uint64_t node_limit)
      : p_(p),
        vehicles_(std::move(vehicles)),
        limit_(node_limit),
        taken_(p.request_weight.size(), 0),
        seen_(p.request_weight.size(), 0) {
    for (int v : vehicles_) {
      const auto& cands = p_.vehicle_candidates[static_cast<std::size_t>(v)];
      // Among candidates covering the same requests only the cheapest (first
      // on ties) can be part of a unique best choice.
      std::map<std::vector<int>, int> cheapest;
      Millis min_cost = std::numeric_limits<Millis>::max();
      for (std::size_t c = 0; c < cands.size(); ++c) {
        auto key = cands[c].requests;
        std::sort(key.begin(), key.end());
        auto [it, fresh] = cheapest.emplace(std::move(key), static_cast<int>(c));
        if (!fresh && cands[c].cost < cands[static_cast<std::size_t>(it->second)].cost) it->second = static_cast<int>(c);
        min_cost = std::min(min_cost, cands[c].cost);
      }
      std::vector<std::pair<Millis, int>> order;
      for (const auto& [key, c] : cheapest) {
        Millis g = -cands[static_cast<std::size_t>(c)].cost;
        for (int r : key) g += p_.request_weight[static_cast<std::size_t>(r)];
        order.emplace_back(g, c);
      }
      std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      sorted_.push_back(std::move(order));
      min_cost_.push_back(cands.empty() ? 0 : min_cost);
    }
    current_.assign(vehicles_.size(), -1);
  }

  void run(const std::vector<int>* hint) {
    greedy();
    if (hint) seed(*hint);
    dfs(0, 0);
  }

  const std::vector<int>& best() const { return best_choice_; }
  bool complete() const { return !aborted_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  bool fits(int v_local, int cand) const {
    const auto& c = p_.vehicle_candidates[static_cast<std::size_t>(vehicles_[static_cast<std::size_t>(v_local)])]
                                         [static_cast<std::size_t>(cand)];
    for (int r : c.requests)
      if (taken_[static_cast<std::size_t>(r)]) return false;
    return true;
  }

  void mark(int v_local, int cand, char value) {
    const auto& c = p_.vehicle_candidates[static_cast<std::size_t>(vehicles_[static_cast<std::size_t>(v_local)])]
                                         [static_cast<std::size_t>(cand)];
    for (int r : c.requests) taken_[static_cast<std::size_t>(r)] = value;
  }

  void greedy() {
    Millis gain = 0;
    std::vector<int> choice(vehicles_.size(), -1);
    bool ok = true;
    for (std::size_t k = 0; k < vehicles_.size(); ++k) {
      for (const auto& [g, c] : sorted_[k]) {
        if (fits(static_cast<int>(k), c)) {
          choice[k] = c;
          gain += g;
          mark(static_cast<int>(k), c, 1);
          break;
        }
      }
      if (choice[k] < 0) ok = false;
    }
    for (std::size_t k = 0; k < vehicles_.size(); ++k)
      if (choice[k] >= 0) mark(static_cast<int>(k), choice[k], 0);
    if (ok) {
      best_gain_ = gain;
      best_choice_ = choice;
      have_best_ = true;
    }
  }

  void seed(const std::vector<int>& hint) {
    std::vector<int> choice(vehicles_.size(), -1);
    Millis gain = 0;
    bool ok = true;
    for (std::size_t k = 0; k < vehicles_.size() && ok; ++k) {
      const int c = hint[static_cast<std::size_t>(vehicles_[k])];
      if (c < 0 || !fits(static_cast<int>(k), c)) {
        ok = false;
        break;
      }
      const auto& cand = p_.vehicle_candidates[static_cast<std::size_t>(vehicles_[k])][static_cast<std::size_t>(c)];
      gain -= cand.cost;
      for (int r : cand.requests) gain += p_.request_weight[static_cast<std::size_t>(r)];
      choice[k] = c;
      mark(static_cast<int>(k), c, 1);
    }
    for (std::size_t k = 0; k < vehicles_.size(); ++k)
      if (choice[k] >= 0) mark(static_cast<int>(k), choice[k], 0);
    if (ok && (!have_best_ || gain > best_gain_)) {
      best_gain_ = gain;
      best_choice_ = choice;
      have_best_ = true;
    }
  }

  // Minimum of two relaxations: every remaining vehicle takes its best
  // fitting candidate; or every remaining vehicle pays its cheapest
  // candidate and each still free request earns its weight minus its share
  // of the extra cost of the best candidate covering it.
  Millis bound(std::size_t k) {
    Millis b = 0;
    Millis min_costs = 0;
    ++stamp_;
    touched_.clear();
    for (std::size_t m = k; m < vehicles_.size(); ++m) {
      bool found = false;
      const auto& cands = p_.vehicle_candidates[static_cast<std::size_t>(vehicles_[m])];
      for (const auto& [g, c] : sorted_[m]) {
        if (!fits(static_cast<int>(m), c)) continue;
        if (!found) b += g;
        found = true;
        const auto& cand = cands[static_cast<std::size_t>(c)];
        if (cand.requests.empty()) continue;
        const Millis share = (cand.cost - min_cost_[m]) / static_cast<Millis>(cand.requests.size());
        for (int r : cand.requests) {
          const auto ri = static_cast<std::size_t>(r);
          const Millis value = p_.request_weight[ri] - share;
          if (seen_[ri] != stamp_) {
            seen_[ri] = stamp_;
            best_share_[ri] = value;
            touched_.push_back(r);
          } else {
            best_share_[ri] = std::max(best_share_[ri], value);
          }
        }
      }
      if (!found) return std::numeric_limits<Millis>::min() / 4;
      min_costs += min_cost_[m];
    }
    Millis shares = 0;
    for (int r : touched_) shares += std::max<Millis>(0, best_share_[static_cast<std::size_t>(r)]);
    return std::min(b, shares - min_costs);
  }

  void dfs(std::size_t k, Millis gain) {
    if (aborted_) return;
    if (++nodes_ > limit_) {
      aborted_ = true;
      return;
    }
    if (k == vehicles_.size()) {
      if (!have_best_ || gain > best_gain_) {
        best_gain_ = gain;
        best_choice_ = current_;
        have_best_ = true;
      }
      return;
    }
    if (have_best_ && gain + bound(k) <= best_gain_) return;
    for (const auto& [g, c] : sorted_[k]) {
      if (!fits(static_cast<int>(k), c)) continue;
      mark(static_cast<int>(k), c, 1);
      current_[k] = c;
      dfs(k + 1, gain + g);
      current_[k] = -1;
      mark(static_cast<int>(k), c, 0);
      if (aborted_) return;
    }
  }

  const AssignmentProblem& p_;
  std::vector<int> vehicles_;
  std::uint64_t limit_;
  std::vector<char> taken_;
  std::vector<std::uint64_t> seen_;
  std::vector<Millis> best_share_ = std::vector<Millis>(p_.request_weight.size(), 0);
  std::vector<int> touched_;
  std::vector<Millis> min_cost_;
  std::uint64_t stamp_ = 0;
  std::vector<std::vector<std::pair<Millis, int>>> sorted_;
  std::vector<int> current_;
  std::vector<int> best_choice_;
  Millis best_gain_ = 0;
  bool have_best_ = false;
  bool aborted_ = false;
  std::uint64_t nodes_ = 0;
};

int find(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

}  // namespace

AssignmentSolution solve_assignment(const AssignmentProblem& problem, std::uint64_t node_limit,
                                    const std::vector<int>* hint) {
  const auto nv = problem.vehicle_candidates.size();
  const auto nr = problem.request_weight.size();
  for (const auto& cands : problem.vehicle_candidates)
    for (const auto& c : cands)
      for (int r : c.requests)
        if (r < 0 || static_cast<std::size_t>(r) >= nr) throw ConsistencyError(fmt::format("candidate refers to request {}", r));

  // Components of vehicles linked through shared requests.
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> owner(nr, -1);
  for (std::size_t v = 0; v < nv; ++v) {
    for (const auto& c : problem.vehicle_candidates[v]) {
      for (int r : c.requests) {
        auto& o = owner[static_cast<std::size_t>(r)];
        if (o < 0) {
          o = static_cast<int>(v);
        } else {
          parent[static_cast<std::size_t>(find(parent, static_cast<int>(v)))] = find(parent, o);
        }
      }
    }
  }
  std::vector<std::vector<int>> components;
  std::vector<int> comp_of(nv, -1);
  for (std::size_t v = 0; v < nv; ++v) {
    const int root = find(parent, static_cast<int>(v));
    if (comp_of[static_cast<std::size_t>(root)] < 0) {
      comp_of[static_cast<std::size_t>(root)] = static_cast<int>(components.size());
      components.emplace_back();
    }
    components[static_cast<std::size_t>(comp_of[static_cast<std::size_t>(root)])].push_back(static_cast<int>(v));
  }

  AssignmentSolution sol;
  sol.choice.assign(nv, -1);
  if (hint && hint->size() != nv) throw ValidationError("assignment hint needs one choice per vehicle");
  for (auto& comp : components) {
    ComponentSearch search(problem, comp, node_limit);
    search.run(hint);
    sol.nodes += search.nodes();
    if (!search.complete()) sol.optimal = false;
    const auto& best = search.best();
    for (std::size_t k = 0; k < comp.size() && k < best.size(); ++k)
      sol.choice[static_cast<std::size_t>(comp[k])] = best[k];
  }
  sol.objective = assignment_objective(problem, sol.choice);
  return sol;
}

}  // namespace fleetsim
