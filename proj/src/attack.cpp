#include "vimix/attack.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vimix/rng.hpp"
#include "vimix/stats.hpp"

namespace vimix {

SearchSpaceEstimate search_space(const ShufflePlan& plan) {
  SearchSpaceEstimate est;
  std::vector<double> log2_terms;
  log2_terms.reserve(plan.entries.size());
  double product = 0.0;
  for (const PlanEntry& e : plan.entries) {
    const std::uint64_t cells =
        static_cast<std::uint64_t>(e.ws_used) * static_cast<std::uint64_t>(e.ws_used);
    const double l = log2_factorial(cells);
    log2_terms.push_back(l);
    product += l;
  }
  est.log2_product = product;
  // log2 of a sum via log-sum-exp
  auto log2_sum_of = [](const std::vector<double>& terms, double scale) {
    if (terms.empty()) return 0.0;
    double m = terms[0] * scale;
    for (double t : terms) m = std::max(m, t * scale);
    double acc = 0.0;
    for (double t : terms) acc += std::exp2(t * scale - m);
    return m + std::log2(acc);
  };
  est.log2_sum = log2_sum_of(log2_terms, 1.0);
  const int c = std::max(1, plan.channels);
  est.per_channel_multiplier = c > 1;
  est.log2_product_channels = product * c;
  est.log2_sum_channels = log2_sum_of(log2_terms, static_cast<double>(c));
  est.sum_exceeds_128 = est.log2_sum > 128.0;
  est.product_exceeds_128 = est.log2_product > 128.0;
  return est;
}

std::string AttackReport::to_record() const {
  std::ostringstream os;
  os.precision(6);
  os << "attack ws=" << ws << " channel=" << channel
     << " windows=" << windows_attempted << " recovery=";
  if (has_truth)
    os << exact_recovery_fraction;
  else
    os << "n/a";
  os << " runtime_s=" << runtime_seconds;
  return os.str();
}

namespace {

// in-window gradient energy plus seam terms against fixed left/top neighbors
double candidate_score(const PlaneU8& fixed, const std::vector<std::uint8_t>& cells,
                       const Region& win) {
  double s = 0.0;
  auto at = [&](int k) { return static_cast<double>(cells[static_cast<std::size_t>(k)]); };
  for (int y = 0; y < win.h; ++y)
    for (int x = 0; x < win.w; ++x) {
      const int k = y * win.w + x;
      if (x + 1 < win.w) {
        const double d = at(k + 1) - at(k);
        s += d * d;
      }
      if (y + 1 < win.h) {
        const double d = at(k + win.w) - at(k);
        s += d * d;
      }
      if (x == 0 && win.x0 > 0) {
        const double d = at(k) - static_cast<double>(fixed(win.y0 + y, win.x0 - 1));
        s += d * d;
      }
      if (y == 0 && win.y0 > 0) {
        const double d = at(k) - static_cast<double>(fixed(win.y0 - 1, win.x0 + x));
        s += d * d;
      }
    }
  return s;
}

}  // namespace

std::pair<ImageTensor, AttackReport> min_vfe_attack(const ImageTensor& shuffled, int ws,
                                                    int channel, const ImageTensor* truth) {
  if (ws != 2 && ws != 3)
    throw std::invalid_argument("min_vfe_attack: ws must be 2 or 3 (combinatorial guard)");
  if (channel < 0 || channel >= shuffled.channel_count())
    throw std::invalid_argument("min_vfe_attack: bad channel");
  if (truth && !truth->same_shape(shuffled))
    throw std::invalid_argument("min_vfe_attack: truth dimensions differ");

  const auto t0 = std::chrono::steady_clock::now();
  AttackReport rep;
  rep.ws = ws;
  rep.channel = channel;

  ImageTensor candidate = shuffled;
  PlaneU8& out = candidate.plane(channel);
  const PlaneU8& in = shuffled.plane(channel);

  std::vector<std::uint8_t> cells, best, trial;
  std::vector<int> order;
  for (const Region& win : split_regions(shuffled.width(), shuffled.height(), ws)) {
    const int n = win.w * win.h;
    cells.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
      cells[static_cast<std::size_t>(k)] = in(win.y0 + k / win.w, win.x0 + k % win.w);
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    double best_score = std::numeric_limits<double>::infinity();
    best = cells;
    trial.resize(static_cast<std::size_t>(n));
    do {
      for (int k = 0; k < n; ++k)
        trial[static_cast<std::size_t>(k)] = cells[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
      const double s = candidate_score(out, trial, win);
      if (s < best_score) {
        best_score = s;
        best = trial;
      }
    } while (std::next_permutation(order.begin(), order.end()));
    for (int k = 0; k < n; ++k)
      out(win.y0 + k / win.w, win.x0 + k % win.w) = best[static_cast<std::size_t>(k)];
    ++rep.windows_attempted;
  }

  if (truth) {
    rep.has_truth = true;
    long hits = 0;
    const PlaneU8& ref = truth->plane(channel);
    for (int y = 0; y < shuffled.height(); ++y)
      for (int x = 0; x < shuffled.width(); ++x)
        if (out(y, x) == ref(y, x)) ++hits;
    rep.exact_recovery_fraction =
        static_cast<double>(hits) / (static_cast<double>(shuffled.width()) * shuffled.height());
  }
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(candidate), rep};
}

std::vector<SweepRow> attack_sweep(const std::vector<ImageTensor>& corpus,
                                   const std::vector<int>& ws_list, std::uint64_t seed,
                                   int channel) {
  std::vector<SweepRow> rows;
  for (int ws : ws_list) {
    SweepRow row;
    row.ws = ws;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const ImageTensor& original = corpus[i];
      const Region whole{0, 0, original.width(), original.height()};
      ImageTensor shuffled = original;
      shuffle_window(shuffled, whole, ws, mix64(seed, i, static_cast<std::uint64_t>(ws)));

      auto [restored, rep] = min_vfe_attack(shuffled, ws, channel, &original);
      row.mean_recovery += rep.exact_recovery_fraction;

      // baseline: place pixels by a fresh random permutation instead of attacking
      ImageTensor random_place = shuffled;
      shuffle_window(random_place, whole, ws,
                     mix64(seed ^ 0xBA5Eul, i, static_cast<std::uint64_t>(ws)));
      long hits = 0;
      const PlaneU8& ref = original.plane(channel);
      const PlaneU8& rnd = random_place.plane(channel);
      for (int y = 0; y < original.height(); ++y)
        for (int x = 0; x < original.width(); ++x)
          if (rnd(y, x) == ref(y, x)) ++hits;
      row.mean_baseline += static_cast<double>(hits) /
                           (static_cast<double>(original.width()) * original.height());
      ++row.images;
    }
    if (row.images > 0) {
      row.mean_recovery /= row.images;
      row.mean_baseline /= row.images;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> attack_sweep_dir(const std::filesystem::path& corpus_dir,
                                       const std::vector<int>& ws_list, std::uint64_t seed,
                                       int channel) {
  namespace fs = std::filesystem;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(corpus_dir))
    if (entry.is_regular_file()) paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  std::vector<ImageTensor> corpus;
  for (const auto& p : paths) {
    try {
      corpus.push_back(load_image(p));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "skipping %s: %s\n", p.string().c_str(), e.what());
    }
  }
  return attack_sweep(corpus, ws_list, seed, channel);
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "ws\timages\tmean_recovery\tmean_baseline\n";
  os.precision(6);
  for (const SweepRow& r : rows)
    os << r.ws << '\t' << r.images << '\t' << r.mean_recovery << '\t' << r.mean_baseline
       << '\n';
  return os.str();
}

}  // namespace vimix
