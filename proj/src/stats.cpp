#include "discern/stats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "discern/error.hpp"
#include "discern/stats/special.hpp"

namespace discern::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw ValidationError("mean of an empty sample");
  // second pass corrects the rounding of the first
  double sum = 0;
  for (double v : x) sum += v;
  const double m = sum / static_cast<double>(x.size());
  double corr = 0;
  for (double v : x) corr += v - m;
  return m + corr / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw ValidationError("variance needs at least two values");
  const double m = mean(x);
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

std::vector<double> zscore(std::span<const double> x) {
  const double m = mean(x);
  const double sd = std::sqrt(sample_variance(x));
  if (!(sd > 0)) throw DegenerateError("cannot standardize a constant vector");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) / sd;
  return out;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  if (x.size() < 3) throw ValidationError("pearson: need at least 3 pairs");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0) || !(syy > 0)) throw DegenerateError("pearson: correlation undefined for a zero-variance vector");
  CorrelationResult out;
  out.n = x.size();
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(out.n - 2);
  const double one_minus = 1.0 - out.r * out.r;
  if (one_minus <= 0) {
    out.p_two_tailed = 0;
  } else {
    out.p_two_tailed = student_t_two_tailed_p(out.r * std::sqrt(df / one_minus), df);
  }
  return out;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::ND: return "ND";
    case Outcome::AR: return "AR";
    case Outcome::AF: return "AF";
  }
  return "?";
}

std::array<double, kTraitCount> CorrelationVector::values() const {
  std::array<double, kTraitCount> v{};
  for (std::size_t i = 0; i < kTraitCount; ++i) v[i] = entries[i].r;
  return v;
}

std::string_view to_string(TestKind k) {
  return k == TestKind::KS ? "KS" : "MWU";
}

namespace {

void require_two_samples(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() < 2 || b.size() < 2)
    throw ValidationError(std::string(what) + ": each sample needs at least 2 values (got " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()) + ")");
  for (auto s : {a, b})
    for (double v : s)
      if (std::isnan(v)) throw ValidationError(std::string(what) + ": NaN in sample");
}

}  // namespace

TwoSampleTestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("ks_two_sample: empty sample");
  require_two_samples(a, b, "ks_two_sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t n1 = sa.size(), n2 = sb.size();

  // Track |i/n1 - j/n2| as the integer |i*n2 - j*n1| so D is one rounding
  // of the exact rational.
  std::size_t i = 0, j = 0;
  long long best = 0;
  while (i < n1 && j < n2) {
    const double v = std::min(sa[i], sb[j]);
    while (i < n1 && sa[i] == v) ++i;
    while (j < n2 && sb[j] == v) ++j;
    const long long diff = static_cast<long long>(i * n2) - static_cast<long long>(j * n1);
    best = std::max(best, diff < 0 ? -diff : diff);
  }
  TwoSampleTestResult out;
  out.test_kind = TestKind::KS;
  out.n1 = n1;
  out.n2 = n2;
  out.statistic = static_cast<double>(best) / static_cast<double>(n1 * n2);
  const double en = static_cast<double>(n1 * n2) / static_cast<double>(n1 + n2);
  out.p_two_tailed = out.statistic == 0 ? 1.0 : kolmogorov_sf(std::sqrt(en) * out.statistic);
  return out;
}

namespace {

struct Ranked {
  std::vector<long long> twice_rank;  // 2 * midrank, pooled order: a first then b
  double tie_term = 0;                // sum over tie groups of t^3 - t
};

Ranked midranks(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(n);
  for (std::size_t i = 0; i < a.size(); ++i) pooled.emplace_back(a[i], i);
  for (std::size_t i = 0; i < b.size(); ++i) pooled.emplace_back(b[i], a.size() + i);
  std::sort(pooled.begin(), pooled.end());
  Ranked out;
  out.twice_rank.assign(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    // ranks i+1 .. j, midrank (i+1+j)/2
    const auto twice = static_cast<long long>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) out.twice_rank[pooled[k].second] = twice;
    const double t = static_cast<double>(j - i);
    out.tie_term += t * t * t - t;
    i = j;
  }
  return out;
}

// Exact permutation p-value. Chooses the smaller group as the "selected" set
// and counts subsets by their doubled rank sum.
double mwu_exact_p(const Ranked& ranked, std::size_t n1, std::size_t n2, double u_a) {
  const std::size_t n = n1 + n2;
  const std::size_t k = std::min(n1, n2);
  long long max_sum = 0;
  {
    std::vector<long long> sorted = ranked.twice_rank;
    std::sort(sorted.rbegin(), sorted.rend());
    for (std::size_t i = 0; i < k; ++i) max_sum += sorted[i];
  }
  const auto width = static_cast<std::size_t>(max_sum + 1);
  // dp[c][s]: number of c-subsets of the items seen so far with doubled rank sum s.
  std::vector<std::vector<double>> dp(k + 1, std::vector<double>(width, 0.0));
  dp[0][0] = 1.0;
  for (std::size_t item = 0; item < n; ++item) {
    const long long w = ranked.twice_rank[item];
    for (std::size_t c = std::min(k, item + 1); c >= 1; --c) {
      auto& to = dp[c];
      const auto& from = dp[c - 1];
      for (long long s = max_sum; s >= w; --s) {
        const double add = from[static_cast<std::size_t>(s - w)];
        if (add != 0) to[static_cast<std::size_t>(s)] += add;
      }
    }
  }
  // For a k-subset with doubled rank sum s: 2U = s - k(k+1); 2*mean = n1*n2.
  const auto kk = static_cast<long long>(k);
  const auto nn = static_cast<long long>(n1 * n2);
  const auto observed_dev = std::llabs(static_cast<long long>(std::llround(2.0 * u_a)) - nn);
  double total = 0, extreme = 0;
  for (std::size_t s = 0; s < width; ++s) {
    const double count = dp[k][s];
    if (count == 0) continue;
    total += count;
    const long long dev = std::llabs(static_cast<long long>(s) - kk * (kk + 1) - nn);
    if (dev >= observed_dev) extreme += count;
  }
  return std::clamp(extreme / total, 0.0, 1.0);
}

}  // namespace

TwoSampleTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MwuMethod method) {
  require_two_samples(a, b, "mann_whitney_u");
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  const Ranked ranked = midranks(a, b);
  const double nd = static_cast<double>(n);
  if (ranked.tie_term == nd * nd * nd - nd)
    throw DegenerateError("mann_whitney_u: all values identical, rank variance is zero");

  long long twice_rank_sum_a = 0;
  for (std::size_t i = 0; i < n1; ++i) twice_rank_sum_a += ranked.twice_rank[i];
  const double r_a = static_cast<double>(twice_rank_sum_a) / 2.0;
  const double u_a = r_a - static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;

  TwoSampleTestResult out;
  out.test_kind = TestKind::MWU;
  out.n1 = n1;
  out.n2 = n2;
  out.statistic = u_a;

  const bool exact = method == MwuMethod::Exact || (method == MwuMethod::Auto && n1 * n2 <= kMwuExactMaxCells);
  if (exact) {
    out.exact = true;
    // u for the smaller group: the DP enumerates that group's subsets.
    const double u_small = n1 <= n2 ? u_a : static_cast<double>(n1 * n2) - u_a;
    out.p_two_tailed = mwu_exact_p(ranked, n1, n2, u_small);
    return out;
  }

  const double n1d = static_cast<double>(n1), n2d = static_cast<double>(n2);
  const double mu = n1d * n2d / 2.0;
  const double var = n1d * n2d / 12.0 * ((nd + 1.0) - ranked.tie_term / (nd * (nd - 1.0)));
  const double dev = std::max(0.0, std::fabs(u_a - mu) - 0.5);
  out.p_two_tailed = normal_two_tailed_p(dev / std::sqrt(var));
  return out;
}

std::string_view to_string(EffectBin b) {
  switch (b) {
    case EffectBin::UpTo0_2: return "d<=.2";
    case EffectBin::UpTo0_5: return ".21-.5";
    case EffectBin::UpTo0_8: return ".51-.8";
    case EffectBin::Above0_8: return ">.8";
  }
  return "?";
}

EffectBin effect_bin(double d) {
  const double m = std::fabs(d);
  if (m <= 0.2) return EffectBin::UpTo0_2;
  if (m <= 0.5) return EffectBin::UpTo0_5;
  if (m <= 0.8) return EffectBin::UpTo0_8;
  return EffectBin::Above0_8;
}

EffectSize cohens_d(std::span<const double> a, std::span<const double> b) {
  require_two_samples(a, b, "cohens_d");
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  const double pooled = ((n1 - 1) * sample_variance(a) + (n2 - 1) * sample_variance(b)) / (n1 + n2 - 2);
  if (!(pooled > 0)) throw DegenerateError("cohens_d: pooled variance is zero");
  EffectSize out;
  out.d = (mean(a) - mean(b)) / std::sqrt(pooled);
  out.bin = effect_bin(out.d);
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("cosine_similarity: length mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0) || !(nb > 0)) throw DegenerateError("cosine_similarity: zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine_similarity(const CorrelationVector& v1, const CorrelationVector& v2, CosineMask mask,
                         const CorrelationVector& reference, double alpha) {
  std::vector<double> a, b;
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    if (mask == CosineMask::SignificantOnly && !(reference.entries[i].p_two_tailed < alpha)) continue;
    a.push_back(v1.entries[i].r);
    b.push_back(v2.entries[i].r);
  }
  if (a.empty()) throw DegenerateError("cosine_similarity: mask selects no traits");
  return cosine_similarity(a, b);
}

std::string_view significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace discern::stats
