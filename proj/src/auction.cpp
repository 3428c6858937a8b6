#include "malady/auction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <string>

#include "malady/errors.hpp"

namespace malady {

namespace {

// Non-termination guard; eps > 0 guarantees termination in theory, the cap
// catches implementation bugs.
constexpr std::size_t kMaxBidEvents = 1'000'000;

void require_valid_instance(const CoefficientMatrix& a) {
  if (a.n_rows < 1) throw invalid_parameter_error("auction requires at least one element");
  if (a.n_classes < 2) {
    throw invalid_parameter_error("auction requires at least two classes");
  }
  for (double v : a.values) {
    if (!std::isfinite(v)) throw invalid_parameter_error("coefficients must be finite");
  }
}

void require_dual_sizes(const CoefficientMatrix& a, const std::vector<double>& p0,
                        const std::vector<double>& t0) {
  if (static_cast<int>(p0.size()) != a.n_classes ||
      static_cast<int>(t0.size()) != a.n_classes) {
    throw invalid_parameter_error("dual vector size does not match class count");
  }
}

BestSecond best_and_second_masked(const double* a_row, const double* d, int n_classes,
                                  const std::vector<char>& allowed) {
  BestSecond r{-1, -std::numeric_limits<double>::infinity(), -1,
               -std::numeric_limits<double>::infinity()};
  for (int i = 0; i < n_classes; ++i) {
    if (!allowed[i]) continue;
    const double v = a_row[i] - d[i];
    if (v > r.best_value) {
      r.second_class = r.best_class;
      r.second_value = r.best_value;
      r.best_class = i;
      r.best_value = v;
    } else if (v > r.second_value) {
      r.second_class = i;
      r.second_value = v;
    }
  }
  return r;
}

// Min-heap of (bid, element) with lazy invalidation: an entry is live iff the
// element is still in the class and its stored bid matches.
struct BidHeap {
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                      std::greater<>>
      q;

  void push(double bid, int x) { q.emplace(bid, x); }

  void drop_stale(const std::vector<int>& assignment, const std::vector<double>& bid,
                  int cls) {
    while (!q.empty()) {
      const auto& [b, x] = q.top();
      if (assignment[x] == cls && bid[x] == b) return;
      q.pop();
    }
  }

  // Lowest (bid, index) among live members. The caller guarantees the class
  // is nonempty.
  std::pair<double, int> min_live(const std::vector<int>& assignment,
                                  const std::vector<double>& bid, int cls) {
    drop_stale(assignment, bid, cls);
    return q.top();
  }
};

AuctionResult finish(Partition&& partition, std::vector<double>&& d) {
  AuctionResult res;
  res.partition = std::move(partition);
  const int K = res.partition.n_classes;
  res.net = std::move(d);
  res.price.resize(K);
  res.incentive.resize(K);
  for (int i = 0; i < K; ++i) {
    res.price[i] = std::max(res.net[i], 0.0);
    res.incentive[i] = std::max(-res.net[i], 0.0);
  }
  return res;
}

}  // namespace

Bounds Bounds::exact(std::vector<int> volumes) {
  Bounds b;
  b.lower = volumes;
  b.upper = std::move(volumes);
  return b;
}

Bounds Bounds::unconstrained(int n_classes, int n_elements) {
  Bounds b;
  b.lower.assign(n_classes, 0);
  b.upper.assign(n_classes, n_elements);
  return b;
}

void Bounds::validate(int n_elements) const {
  if (lower.size() != upper.size() || lower.empty()) {
    throw invalid_parameter_error("bounds class counts mismatch");
  }
  long long sum_lower = 0, sum_upper = 0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (lower[i] < 0 || lower[i] > upper[i]) {
      throw invalid_parameter_error("bounds require 0 <= B_i <= U_i");
    }
    sum_lower += lower[i];
    sum_upper += upper[i];
  }
  if (sum_lower > n_elements || sum_upper < n_elements) {
    throw infeasibility_error("no assignment of " + std::to_string(n_elements) +
                              " elements satisfies the class bounds");
  }
}

void AuctionSchedule::validate() const {
  if (!(epsilon0 > 0.0) || !(epsilon_min > 0.0) || !(alpha > 1.0)) {
    throw invalid_parameter_error("schedule requires epsilon0 > 0, epsilon_min > 0, alpha > 1");
  }
}

bool Partition::complete() const {
  return std::none_of(assignment.begin(), assignment.end(),
                      [](int c) { return c == kUnassigned; });
}

std::vector<int> Partition::counts() const {
  std::vector<int> c(n_classes, 0);
  for (int a : assignment) {
    if (a != kUnassigned) ++c[a];
  }
  return c;
}

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> m(n_classes);
  for (int x = 0; x < size(); ++x) {
    if (assignment[x] != kUnassigned) m[assignment[x]].push_back(x);
  }
  return m;
}

BestSecond best_and_second(const double* a_row, const double* d, int n_classes) {
  if (n_classes < 2) {
    throw invalid_parameter_error("best_and_second requires at least two classes");
  }
  const std::vector<char> allowed(n_classes, 1);
  return best_and_second_masked(a_row, d, n_classes, allowed);
}

double total_benefit(const CoefficientMatrix& a, const Partition& partition) {
  double total = 0.0;
  for (int x = 0; x < partition.size(); ++x) {
    if (partition.assignment[x] != kUnassigned) total += a.at(x, partition.assignment[x]);
  }
  return total;
}

EpsCsResult check_eps_cs(const Partition& partition, const CoefficientMatrix& a,
                         const std::vector<double>& p, const std::vector<double>& t,
                         double eps, const std::vector<char>* allowed) {
  const int K = a.n_classes;
  double worst = -std::numeric_limits<double>::infinity();
  for (int x = 0; x < partition.size(); ++x) {
    const int i = partition.assignment[x];
    if (i == kUnassigned) {
      throw invalid_parameter_error("check_eps_cs requires a complete partition");
    }
    const double* row = a.row(x);
    const double assigned = row[i] - p[i] + t[i];
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < K; ++j) {
      if (allowed && !(*allowed)[j]) continue;
      best = std::max(best, row[j] - p[j] + t[j]);
    }
    worst = std::max(worst, best - assigned - eps);
  }
  return {worst <= 0.0, worst};
}

AuctionResult membership_auction(double eps, const std::vector<int>& volumes,
                                 const CoefficientMatrix& a,
                                 const std::vector<double>& p0) {
  require_valid_instance(a);
  if (!(eps > 0.0)) throw invalid_parameter_error("eps must be positive");
  const int n = a.n_rows;
  const int K = a.n_classes;
  if (static_cast<int>(volumes.size()) != K || static_cast<int>(p0.size()) != K) {
    throw invalid_parameter_error("volume/price size does not match class count");
  }
  long long total = 0;
  for (int v : volumes) {
    if (v < 0) throw invalid_parameter_error("volumes must be nonnegative");
    total += v;
  }
  if (total != n) {
    throw infeasibility_error("volumes must sum to the number of elements");
  }

  std::vector<double> p = p0;
  std::vector<char> allowed(K, 0);
  int n_allowed = 0;
  for (int i = 0; i < K; ++i) {
    allowed[i] = volumes[i] > 0;
    n_allowed += allowed[i];
  }

  Partition part;
  part.n_classes = K;
  part.assignment.assign(n, kUnassigned);
  part.bid.assign(n, 0.0);

  // Single sellable class: the matching is forced and prices never move.
  if (n_allowed == 1) {
    const int only = static_cast<int>(std::find(allowed.begin(), allowed.end(), 1) -
                                      allowed.begin());
    std::fill(part.assignment.begin(), part.assignment.end(), only);
    return finish(std::move(part), std::move(p));
  }

  // Bids use a fractionally deflated increment so the theoretically tight
  // member keeps real slack against the caller's eps instead of sitting on a
  // rounding knife edge.
  const double eps_bid = eps * (1.0 - 0x1.0p-26);
  std::vector<int> counts(K, 0);
  std::vector<BidHeap> heaps(K);
  int remaining = n;
  std::size_t events = 0;

  while (remaining > 0) {
    for (int x = 0; x < n; ++x) {
      if (part.assignment[x] != kUnassigned) continue;
      if (++events > kMaxBidEvents) {
        throw diagnostic_error("membership auction exceeded the bidding event cap");
      }
      const BestSecond bs = best_and_second_masked(a.row(x), p.data(), K, allowed);
      const int istar = bs.best_class;
      const double b = p[istar] + eps_bid + bs.best_value - bs.second_value;
      if (counts[istar] == volumes[istar]) {
        // Class full: displace the lowest bidder and reprice at the new
        // member minimum.
        auto [ybid, y] = heaps[istar].min_live(part.assignment, part.bid, istar);
        part.assignment[y] = kUnassigned;
        part.assignment[x] = istar;
        part.bid[x] = b;
        heaps[istar].push(b, x);
        p[istar] = heaps[istar].min_live(part.assignment, part.bid, istar).first;
      } else {
        part.assignment[x] = istar;
        part.bid[x] = b;
        heaps[istar].push(b, x);
        ++counts[istar];
        --remaining;
        if (counts[istar] == volumes[istar]) {
          p[istar] = heaps[istar].min_live(part.assignment, part.bid, istar).first;
        }
      }
    }
  }
  return finish(std::move(part), std::move(p));
}

AuctionResult upper_bound_auction(double eps, const Bounds& bounds,
                                  const CoefficientMatrix& a,
                                  const std::vector<double>& p0,
                                  const std::vector<double>& t0) {
  require_valid_instance(a);
  require_dual_sizes(a, p0, t0);
  if (!(eps > 0.0)) throw invalid_parameter_error("eps must be positive");
  const int n = a.n_rows;
  const int K = a.n_classes;
  if (bounds.n_classes() != K) {
    throw invalid_parameter_error("bounds class count does not match coefficients");
  }
  long long sum_upper = 0;
  for (int u : bounds.upper) sum_upper += u;
  if (sum_upper < n) {
    throw infeasibility_error("upper bounds admit fewer members than elements");
  }

  std::vector<double> d(K);
  for (int i = 0; i < K; ++i) d[i] = p0[i] - t0[i];

  std::vector<char> allowed(K, 0);
  int n_allowed = 0;
  for (int i = 0; i < K; ++i) {
    allowed[i] = bounds.upper[i] > 0;
    n_allowed += allowed[i];
  }

  Partition part;
  part.n_classes = K;
  part.assignment.assign(n, kUnassigned);
  part.bid.assign(n, 0.0);

  if (n_allowed == 1) {
    const int only = static_cast<int>(std::find(allowed.begin(), allowed.end(), 1) -
                                      allowed.begin());
    std::fill(part.assignment.begin(), part.assignment.end(), only);
    return finish(std::move(part), std::move(d));
  }

  const double eps_bid = eps * (1.0 - 0x1.0p-26);  // see membership_auction
  std::vector<int> counts(K, 0);
  std::vector<BidHeap> heaps(K);
  int remaining = n;
  std::size_t events = 0;

  while (remaining > 0) {
    for (int x = 0; x < n; ++x) {
      if (part.assignment[x] != kUnassigned) continue;
      if (++events > kMaxBidEvents) {
        throw diagnostic_error("upper bound auction exceeded the bidding event cap");
      }
      const BestSecond bs = best_and_second_masked(a.row(x), d.data(), K, allowed);
      const int istar = bs.best_class;
      const double b = d[istar] + eps_bid + bs.best_value - bs.second_value;
      if (counts[istar] == bounds.upper[istar]) {
        auto [ybid, y] = heaps[istar].min_live(part.assignment, part.bid, istar);
        part.assignment[y] = kUnassigned;
        part.assignment[x] = istar;
        part.bid[x] = b;
        heaps[istar].push(b, x);
        d[istar] = heaps[istar].min_live(part.assignment, part.bid, istar).first;
      } else if (counts[istar] == bounds.lower[istar] && d[istar] < 0.0) {
        // The class sits at its lower bound on incentive support; swap so the
        // membership count stays put and shrink the incentive toward zero.
        auto [ybid, y] = heaps[istar].min_live(part.assignment, part.bid, istar);
        part.assignment[y] = kUnassigned;
        part.assignment[x] = istar;
        part.bid[x] = b;
        heaps[istar].push(b, x);
        d[istar] = std::min(
            heaps[istar].min_live(part.assignment, part.bid, istar).first, 0.0);
      } else {
        part.assignment[x] = istar;
        part.bid[x] = b;
        heaps[istar].push(b, x);
        ++counts[istar];
        --remaining;
      }
    }
  }
  return finish(std::move(part), std::move(d));
}

AuctionResult lower_bound_auction(double eps, const Bounds& bounds,
                                  const CoefficientMatrix& a,
                                  const std::vector<double>& p0,
                                  const std::vector<double>& t0,
                                  const Partition& start) {
  require_valid_instance(a);
  require_dual_sizes(a, p0, t0);
  if (!(eps > 0.0)) throw invalid_parameter_error("eps must be positive");
  const int n = a.n_rows;
  const int K = a.n_classes;
  if (bounds.n_classes() != K || start.n_classes != K || start.size() != n) {
    throw invalid_parameter_error("lower bound auction inputs disagree on shape");
  }
  if (!start.complete()) {
    throw invalid_parameter_error("lower bound auction requires a complete matching");
  }
  long long sum_lower = 0;
  for (int b : bounds.lower) sum_lower += b;
  if (sum_lower > n) {
    throw infeasibility_error("lower bounds require more members than elements");
  }

  Partition part = start;
  std::vector<int> counts = part.counts();
  for (int i = 0; i < K; ++i) {
    if (counts[i] > bounds.upper[i]) {
      throw invalid_parameter_error("lower bound auction requires an upper-feasible start");
    }
  }

  std::vector<double> d(K);
  for (int i = 0; i < K; ++i) d[i] = p0[i] - t0[i];

  const double eps_bid = eps * (1.0 - 0x1.0p-26);  // see membership_auction
  const auto deficient = [&](int i) {
    return (counts[i] < bounds.upper[i] && d[i] > 0.0) || counts[i] < bounds.lower[i];
  };

  std::size_t events = 0;
  bool any;
  do {
    any = false;
    for (int istar = 0; istar < K; ++istar) {
      if (!deficient(istar)) continue;
      any = true;
      while (deficient(istar)) {
        if (++events > kMaxBidEvents) {
          throw diagnostic_error("lower bound auction exceeded the transfer event cap");
        }
        // Cheapest transfer into istar. Delta is recomputed from the current
        // duals each pass so accepted moves never act on stale costs.
        int xmin = -1;
        double dmin = std::numeric_limits<double>::infinity();
        for (int x = 0; x < n; ++x) {
          const int j = part.assignment[x];
          if (j == istar) continue;
          const double delta = (a.at(x, j) - d[j]) - (a.at(x, istar) - d[istar]);
          if (delta < dmin) {
            dmin = delta;
            xmin = x;
          }
        }
        const auto transfer = [&](int x) {
          --counts[part.assignment[x]];
          part.assignment[x] = istar;
          part.bid[x] = 0.0;  // bids are a forward-auction artifact
          ++counts[istar];
        };
        if (counts[istar] < bounds.lower[istar]) {
          transfer(xmin);
          if (counts[istar] == bounds.lower[istar] && dmin >= 0.0) {
            d[istar] -= dmin + eps_bid;
          }
        } else {
          if (dmin + eps_bid >= d[istar]) {
            d[istar] = 0.0;
          } else {
            transfer(xmin);
            if (counts[istar] == bounds.upper[istar] && dmin >= 0.0) {
              d[istar] -= dmin + eps_bid;
            }
          }
        }
      }
    }
  } while (any);

  return finish(std::move(part), std::move(d));
}

int schedule_round_count(const AuctionSchedule& schedule, std::size_t n_total) {
  schedule.validate();
  if (n_total == 0) throw invalid_parameter_error("n_total must be positive");
  const double eps_bar = schedule.epsilon_min / static_cast<double>(n_total);
  int rounds = 0;
  for (double eps = schedule.epsilon0; eps >= eps_bar; eps /= schedule.alpha) ++rounds;
  return rounds;
}

AuctionResult scaled_auction(const CoefficientMatrix& a, const Bounds& bounds,
                             const AuctionSchedule& schedule, std::size_t n_total,
                             std::ostream* debug_stream) {
  require_valid_instance(a);
  schedule.validate();
  bounds.validate(a.n_rows);
  if (n_total == 0) throw invalid_parameter_error("n_total must be positive");
  const double eps_bar = schedule.epsilon_min / static_cast<double>(n_total);
  if (schedule.epsilon0 < eps_bar) {
    throw invalid_parameter_error(
        "schedule produces no auction round (epsilon0 < epsilon_min / N)");
  }

  const int K = a.n_classes;
  std::vector<double> p(K, 0.0), t(K, 0.0);
  AuctionResult result;
  for (double eps = schedule.epsilon0; eps >= eps_bar; eps /= schedule.alpha) {
    AuctionResult uba = upper_bound_auction(eps, bounds, a, p, t);
    AuctionResult lba =
        lower_bound_auction(eps, bounds, a, uba.price, uba.incentive, uba.partition);
    p = lba.price;
    t = lba.incentive;
    if (debug_stream) {
      char buf[64];
      auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        *debug_stream << buf;
      };
      *debug_stream << "{\"epsilon\":";
      put(eps);
      *debug_stream << ",\"p\":[";
      for (int i = 0; i < K; ++i) {
        if (i) *debug_stream << ',';
        put(p[i]);
      }
      *debug_stream << "],\"t\":[";
      for (int i = 0; i < K; ++i) {
        if (i) *debug_stream << ',';
        put(t[i]);
      }
      *debug_stream << "],\"assignment\":[";
      for (int x = 0; x < lba.partition.size(); ++x) {
        if (x) *debug_stream << ',';
        *debug_stream << lba.partition.assignment[x];
      }
      *debug_stream << "],\"total_benefit\":";
      put(total_benefit(a, lba.partition));
      *debug_stream << "}\n";
    }
    result = std::move(lba);
  }
  return result;
}

}  // namespace malady
