#include "epifeed/grid_dp.hpp"

#include "epifeed/logistic.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace epifeed {

HistoryGrid::HistoryGrid(double zeta, double eps, int horizon)
    : zeta_(zeta), eps_(eps), horizon_(horizon) {
  if (!(zeta > 0.0) || !(eps > 0.0) || horizon < 1)
    throw DomainError("HistoryGrid: need zeta > 0, eps > 0, H >= 1");
  const double h2 = static_cast<double>(horizon) * horizon;
  width_ = eps / (6.0 * h2);
  const double ratio = 12.0 * h2 * zeta / eps;
  if (ratio > 9e15) throw SizeError("HistoryGrid: interval count overflows");
  m_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(ratio - 1e-9)));
}

std::int64_t HistoryGrid::index(double x) const {
  const double pos = std::floor((x + zeta_) / width_);
  if (!(pos > 0.0)) return 0;
  if (pos >= static_cast<double>(m_ - 1)) return m_ - 1;
  return static_cast<std::int64_t>(pos);
}

StepScores::StepScores(int h, int s, int a) : horizon(h), num_states(s), num_actions(a) {
  if (h < 1 || s < 1 || a < 1) throw StructuralError("StepScores: dimensions must be positive");
  const auto n = static_cast<std::size_t>(h) * s * a;
  w.assign(n, 0.0);
  v.assign(n, 0.0);
  b.assign(n, 0.0);
}

double StepScores::score(std::span<const Step> tau) const {
  double sw = 0.0, sv = 0.0, sb = 0.0;
  for (int h = 0; h < horizon; ++h) {
    const auto o = offset(h, tau[h].state, tau[h].action);
    sw += w[o];
    sv += v[o];
    sb += b[o];
  }
  return std::min(mu(sw) + sv, 1.0) + sb;
}

double StepScores::covering_zeta() const {
  double zw = 0.0, zv = 0.0, zb = 0.0;
  for (int h = 0; h < horizon; ++h) {
    double mw = 0.0, mv = 0.0, mb = 0.0;
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_actions; ++a) {
        const auto o = offset(h, s, a);
        mw = std::max(mw, std::abs(w[o]));
        mv = std::max(mv, std::abs(v[o]));
        mb = std::max(mb, std::abs(b[o]));
      }
    zw += mw;
    zv += mv;
    zb += mb;
  }
  return std::max({zw, zv, zb});
}

double grid_dp_dense_bytes(int horizon, int num_states, std::int64_t m) {
  const double md = static_cast<double>(m);
  return static_cast<double>(horizon) * num_states * md * md * md *
         (sizeof(double) + sizeof(std::uint8_t));
}

std::size_t GridDpPolicy::KeyHash::operator()(const Key& key) const noexcept {
  std::uint64_t x = mix_seed(static_cast<std::uint64_t>(key.h) << 32 | static_cast<std::uint32_t>(key.s),
                             static_cast<std::uint64_t>(key.i));
  x = mix_seed(x, static_cast<std::uint64_t>(key.j));
  return static_cast<std::size_t>(mix_seed(x, static_cast<std::uint64_t>(key.k)));
}

std::size_t GridDpPolicy::dense_index(int s, std::int64_t i, std::int64_t j,
                                      std::int64_t k) const {
  const auto m = static_cast<std::size_t>(grid_.size());
  return ((static_cast<std::size_t>(s) * m + static_cast<std::size_t>(i)) * m +
          static_cast<std::size_t>(j)) * m + static_cast<std::size_t>(k);
}

const GridDpPolicy::Cell& GridDpPolicy::sparse_cell(int h, int s, std::int64_t i,
                                                    std::int64_t j, std::int64_t k) const {
  const auto it = cells_.find(Key{h, s, i, j, k});
  if (it == cells_.end()) throw StructuralError("GridDpPolicy: cell was not filled");
  return it->second;
}

double GridDpPolicy::value_at(int h, int s, std::int64_t i, std::int64_t j,
                              std::int64_t k) const {
  if (dense_) return values_.at(h).at(dense_index(s, i, j, k));
  return sparse_cell(h, s, i, j, k).value;
}

int GridDpPolicy::action_at(int h, int s, std::int64_t i, std::int64_t j,
                            std::int64_t k) const {
  if (dense_) return actions_.at(h).at(dense_index(s, i, j, k));
  return sparse_cell(h, s, i, j, k).action;
}

std::size_t GridDpPolicy::cells_filled() const {
  if (!dense_) return cells_.size();
  std::size_t n = 0;
  for (const auto& level : values_) n += level.size();
  return n;
}

int GridDpPolicy::act(int h, int s, std::span<const Step> prefix) const {
  double sw = 0.0, sv = 0.0, sb = 0.0;
  for (int l = 0; l < h; ++l) {
    const auto o = scores_.offset(l, prefix[l].state, prefix[l].action);
    sw += scores_.w[o];
    sv += scores_.v[o];
    sb += scores_.b[o];
  }
  return action_at(h, s, grid_.index(sw), grid_.index(sv), grid_.index(sb));
}

void GridDpPolicy::distribution(int h, int s, std::span<const Step> prefix,
                                std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[act(h, s, prefix)] = 1.0;
}

namespace {

void put_u64(std::ofstream& os, std::uint64_t x) {
  for (int b = 0; b < 8; ++b) os.put(static_cast<char>((x >> (8 * b)) & 0xff));
}

}  // namespace

void GridDpPolicy::write_tensors(const std::filesystem::path& path) const {
  if (!dense_) throw StructuralError("write_tensors: only dense plans carry full tensors");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_tensors: cannot open " + path.string());
  put_u64(os, static_cast<std::uint64_t>(scores_.horizon));
  put_u64(os, static_cast<std::uint64_t>(scores_.num_states));
  put_u64(os, static_cast<std::uint64_t>(grid_.size()));
  for (const auto& level : values_)
    for (double v : level) put_u64(os, std::bit_cast<std::uint64_t>(v));
  for (const auto& level : actions_)
    os.write(reinterpret_cast<const char*>(level.data()), static_cast<std::streamsize>(level.size()));
}

namespace {

// Right-hand side of the recursion for one (h, s, i, j, k) and action a,
// written once so that all three fills share the exact arithmetic.
struct Recursion {
  const TabularMdp& kernel;
  const StepScores& sc;
  const HistoryGrid& grid;

  double terminal(int s, int a, std::int64_t i, std::int64_t j, std::int64_t k) const {
    const auto o = sc.offset(sc.horizon - 1, s, a);
    return std::min(mu(grid.center(i) + sc.w[o]) + grid.center(j) + sc.v[o], 1.0) +
           grid.center(k) + sc.b[o];
  }
  // successor indices after taking a at (h, s) from history cell (i, j, k)
  void shift(int h, int s, int a, std::int64_t& i, std::int64_t& j, std::int64_t& k) const {
    const auto o = sc.offset(h, s, a);
    i = grid.index(sc.w[o] + grid.center(i));
    j = grid.index(sc.v[o] + grid.center(j));
    k = grid.index(sc.b[o] + grid.center(k));
  }
};

void fill_dense_serial(const Recursion& rec, std::vector<std::vector<double>>& values,
                       std::vector<std::vector<std::uint8_t>>& actions) {
  const int H = rec.sc.horizon, S = rec.sc.num_states, A = rec.sc.num_actions;
  const std::int64_t m = rec.grid.size();
  auto at = [m](int s, std::int64_t i, std::int64_t j, std::int64_t k) {
    return ((static_cast<std::size_t>(s) * m + i) * m + j) * m + k;
  };
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s)
      for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < m; ++j)
          for (std::int64_t k = 0; k < m; ++k) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
              double q;
              if (h == H - 1) {
                q = rec.terminal(s, a, i, j, k);
              } else {
                std::int64_t ii = i, jj = j, kk = k;
                rec.shift(h, s, a, ii, jj, kk);
                const auto row = rec.kernel.row(s, a);
                const auto& next = values[h + 1];
                q = 0.0;
                for (int s2 = 0; s2 < S; ++s2) q += row[s2] * next[at(s2, ii, jj, kk)];
              }
              if (q > best) {
                best = q;
                best_a = a;
              }
            }
            values[h][at(s, i, j, k)] = best;
            actions[h][at(s, i, j, k)] = static_cast<std::uint8_t>(best_a);
          }
  }
}

// Same recursion with the shifted indices precomputed per (h, s, a) and the
// cells of one level swept in parallel. Level h reads level h+1 only and each
// iteration writes one distinct cell.
void fill_dense_parallel(const Recursion& rec, std::vector<std::vector<double>>& values,
                         std::vector<std::vector<std::uint8_t>>& actions) {
  const int H = rec.sc.horizon, S = rec.sc.num_states, A = rec.sc.num_actions;
  const std::int64_t m = rec.grid.size();
  const auto mu_ = static_cast<std::size_t>(m);
  const std::int64_t cells = static_cast<std::int64_t>(S) * m * m * m;

  std::vector<double> centers(mu_);
  for (std::int64_t i = 0; i < m; ++i) centers[i] = rec.grid.center(i);

  // shifted[(h*S+s)*A+a] = {index(w+c_i)}, {index(v+c_j)}, {index(b+c_k)}
  struct Shifts {
    std::vector<std::int64_t> w, v, b;
  };
  std::vector<Shifts> shifted(static_cast<std::size_t>(H) * S * A);
  std::vector<double> terminal_mu(static_cast<std::size_t>(S) * A * mu_);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const auto o = rec.sc.offset(h, s, a);
        Shifts& sh = shifted[o];
        sh.w.resize(mu_);
        sh.v.resize(mu_);
        sh.b.resize(mu_);
        for (std::int64_t i = 0; i < m; ++i) {
          sh.w[i] = rec.grid.index(rec.sc.w[o] + centers[i]);
          sh.v[i] = rec.grid.index(rec.sc.v[o] + centers[i]);
          sh.b[i] = rec.grid.index(rec.sc.b[o] + centers[i]);
        }
        if (h == H - 1)
          for (std::int64_t i = 0; i < m; ++i)
            terminal_mu[(static_cast<std::size_t>(s) * A + a) * mu_ + i] =
                mu(centers[i] + rec.sc.w[o]);
      }

  for (int h = H - 1; h >= 0; --h) {
    double* out_v = values[h].data();
    std::uint8_t* out_a = actions[h].data();
    const double* next = h + 1 < H ? values[h + 1].data() : nullptr;
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < cells; ++c) {
      const std::int64_t k = c % m;
      const std::int64_t j = (c / m) % m;
      const std::int64_t i = (c / (m * m)) % m;
      const int s = static_cast<int>(c / (m * m * m));
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        const auto o = rec.sc.offset(h, s, a);
        double q;
        if (next == nullptr) {
          q = std::min(terminal_mu[(static_cast<std::size_t>(s) * A + a) * mu_ + i] + centers[j] +
                           rec.sc.v[o],
                       1.0) +
              centers[k] + rec.sc.b[o];
        } else {
          const Shifts& sh = shifted[o];
          const std::size_t tail =
              (static_cast<std::size_t>(sh.w[i]) * mu_ + sh.v[j]) * mu_ + sh.b[k];
          const auto row = rec.kernel.row(s, a);
          q = 0.0;
          for (int s2 = 0; s2 < S; ++s2) q += row[s2] * next[s2 * mu_ * mu_ * mu_ + tail];
        }
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      out_v[c] = best;
      out_a[c] = static_cast<std::uint8_t>(best_a);
    }
  }
}

}  // namespace

GridDpPolicy grid_dp_plan(const TabularMdp& kernel, const StepScores& scores, double zeta,
                          double eps, const GridDpOptions& opts) {
  if (kernel.num_states() != scores.num_states || kernel.num_actions() != scores.num_actions ||
      kernel.horizon() != scores.horizon)
    throw StructuralError("grid_dp_plan: kernel and score tables disagree on shape");
  if (scores.num_actions > 255) throw StructuralError("grid_dp_plan: at most 255 actions");

  HistoryGrid grid(zeta, eps, scores.horizon);
  GridDpPolicy policy(grid, scores);
  const int H = scores.horizon, S = scores.num_states, A = scores.num_actions;
  const std::int64_t m = grid.size();
  const double bytes = grid_dp_dense_bytes(H, S, m);
  const bool fits = bytes <= static_cast<double>(opts.memory_budget_bytes);
  if (opts.mode == GridDpMode::Dense && !fits) {
    std::ostringstream msg;
    msg << "grid_dp_plan: dense tensors need m = " << m << " intervals (" << bytes
        << " bytes) but the budget is " << opts.memory_budget_bytes << " bytes";
    throw SizeError(msg.str());
  }
  const Recursion rec{kernel, policy.scores_, policy.grid_};
  const std::int64_t origin = grid.index(0.0);
  const auto rho = kernel.init_dist();

  if (opts.mode != GridDpMode::Sparse && fits) {
    policy.dense_ = true;
    const auto level = static_cast<std::size_t>(S) * m * m * m;
    policy.values_.assign(H, std::vector<double>(level));
    policy.actions_.assign(H, std::vector<std::uint8_t>(level));
    if (opts.parallel)
      fill_dense_parallel(rec, policy.values_, policy.actions_);
    else
      fill_dense_serial(rec, policy.values_, policy.actions_);
    double value = 0.0;
    for (int s = 0; s < S; ++s)
      value += rho[s] * policy.values_[0][policy.dense_index(s, origin, origin, origin)];
    policy.planned_value_ = value;
    return policy;
  }

  // Sparse fill: memoized recursion from every cell a prefix can map to.
  policy.dense_ = false;
  const double prefixes = [&] {
    double total = 0.0, level = 1.0;
    for (int h = 0; h < H; ++h) {
      total += level;
      level *= static_cast<double>(S) * A;
    }
    return total;
  }();
  if (prefixes > opts.prefix_cap)
    throw SizeError("grid_dp_plan: sparse fill would enumerate too many prefixes");

  auto& cells = policy.cells_;
  std::function<double(int, int, std::int64_t, std::int64_t, std::int64_t)> eval =
      [&](int h, int s, std::int64_t i, std::int64_t j, std::int64_t k) -> double {
    const GridDpPolicy::Key key{h, s, i, j, k};
    if (auto it = cells.find(key); it != cells.end()) return it->second.value;
    double best = -std::numeric_limits<double>::infinity();
    int best_a = 0;
    for (int a = 0; a < A; ++a) {
      double q;
      if (h == H - 1) {
        q = rec.terminal(s, a, i, j, k);
      } else {
        std::int64_t ii = i, jj = j, kk = k;
        rec.shift(h, s, a, ii, jj, kk);
        const auto row = kernel.row(s, a);
        q = 0.0;
        for (int s2 = 0; s2 < S; ++s2) q += row[s2] * eval(h + 1, s2, ii, jj, kk);
      }
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    cells.emplace(key, GridDpPolicy::Cell{best, best_a});
    return best;
  };

  // Walk every (s,a) prefix with running sums accumulated in act() order.
  std::function<void(int, double, double, double)> walk = [&](int h, double sw, double sv,
                                                              double sb) {
    const auto i = grid.index(sw), j = grid.index(sv), k = grid.index(sb);
    for (int s = 0; s < S; ++s) eval(h, s, i, j, k);
    if (h + 1 == H) return;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const auto o = scores.offset(h, s, a);
        walk(h + 1, sw + scores.w[o], sv + scores.v[o], sb + scores.b[o]);
      }
  };
  walk(0, 0.0, 0.0, 0.0);

  double value = 0.0;
  for (int s = 0; s < S; ++s) value += rho[s] * cells.at({0, s, origin, origin, origin}).value;
  policy.planned_value_ = value;
  return policy;
}

}  // namespace epifeed
