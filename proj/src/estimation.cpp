#include "hybridcare/estimation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "hybridcare/analytics.hpp"
#include "hybridcare/errors.hpp"
#include "hybridcare/numeric.hpp"
#include "hybridcare/random.hpp"

namespace hybridcare {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct IgStats {
  double mu = 0.0;
  double inv_shape = 0.0;
};

std::optional<IgStats> ig_mle(std::span<const double> t, std::span<const std::size_t> idx) {
  const auto n = static_cast<double>(idx.size());
  double sum = 0.0;
  double sum_inv = 0.0;
  for (std::size_t i : idx) {
    sum += t[i];
    sum_inv += 1.0 / t[i];
  }
  IgStats s;
  s.mu = sum / n;
  s.inv_shape = sum_inv / n - 1.0 / s.mu;
  if (!(s.inv_shape > 1e-12 / s.mu)) return std::nullopt;
  return s;
}

std::vector<std::size_t> identity_index(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

// Percentile bootstrap of a vector-valued statistic; stat returns nullopt for
// resamples on which the statistic is undefined.
template <std::size_t D, typename Stat>
std::pair<std::array<Estimate, D>, int> bootstrap(std::size_t n, const std::array<double, D>& point,
                                                 const BootstrapOptions& opts, Stat&& stat) {
  RandomStream rng(stream_key(opts.seed, {n}));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::array<std::vector<double>, D> draws;
  std::vector<std::size_t> idx(n);
  for (int b = 0; b < opts.resamples; ++b) {
    for (auto& i : idx) i = pick(rng.engine());
    if (auto v = stat(std::span<const std::size_t>(idx))) {
      for (std::size_t d = 0; d < D; ++d) draws[d].push_back((*v)[d]);
    }
  }
  std::array<Estimate, D> out;
  const double tail = 0.5 * (1.0 - opts.level);
  for (std::size_t d = 0; d < D; ++d) {
    Estimate& e = out[d];
    e.value = point[d];
    auto& v = draws[d];
    if (v.size() < 2) {
      e.std_error = e.ci_low = e.ci_high = kNaN;
      continue;
    }
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    e.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1));
    std::sort(v.begin(), v.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(v.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, v.size() - 1);
      return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    e.ci_low = quantile(tail);
    e.ci_high = quantile(1.0 - tail);
  }
  return {out, static_cast<int>(draws[0].size())};
}

void check_options(const BootstrapOptions& opts) {
  if (opts.resamples < 0) throw ValidationError("bootstrap resamples must be >= 0");
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw ValidationError("bootstrap level must lie in (0, 1)");
}

struct RemoteMoments {
  double rho = 0.0;
  double theta_R = 0.0;
  double sigma_R = 0.0;
  double fraction = 0.0;
  double mean = 0.0;
};

RemoteMoments remote_moments(double fraction, double mean, double x, double a) {
  const double rho = invert_call_in_prob(fraction, x, a);
  const double theta = ((1.0 - fraction) * x - fraction * a) / mean;
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw IdentifiabilityError("mean remote length of stay is inconsistent with any theta_R > 0");
  }
  return {rho, theta, std::sqrt(2.0 * theta / rho), fraction, mean};
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_number(const std::string& field, std::size_t line, const char* column) {
  const std::string f = trim(field);
  if (f.empty()) return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || ptr != f.data() + f.size()) {
    throw ValidationError("line " + std::to_string(line) + ": bad number in column '" + column + "'");
  }
  return v;
}

constexpr const char* kCsvColumns[] = {"type", "station", "los", "called_in",
                                       "score_before_travel", "score_after_travel", "T"};

}  // namespace

double invert_call_in_prob(double fraction, double x, double a) {
  if (!(x > 0.0) || !(a > 0.0)) throw ValidationError("x and a must be > 0");
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw IdentifiabilityError("call-in fraction must lie strictly between 0 and 1");
  }
  const double sup = x / (x + a);
  if (fraction >= sup) {
    throw IdentifiabilityError("call-in fraction is not below x/(x+a); rho is not identifiable");
  }
  auto gap = [&](double rho) { return call_in_prob(rho, x, a) - fraction; };
  double lo = 1e-12 / (x + a);
  if (gap(lo) <= 0.0) throw IdentifiabilityError("call-in fraction too close to x/(x+a)");
  double hi = 1.0 / (x + a);
  while (gap(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw IdentifiabilityError("call-in fraction too small to invert");
  }
  return numeric::bisect(gap, lo, hi, 1e-15 * hi).x;
}

OnsiteFit fit_onsite(std::span<const double> los, double x, const BootstrapOptions& opts) {
  check_options(opts);
  if (los.size() < 2) throw ValidationError("on-site fit needs at least 2 samples");
  if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError("on-site start score must be > 0");
  for (double t : los) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("on-site lengths of stay must be positive");
  }
  const auto all = identity_index(los.size());
  const auto point = ig_mle(los, all);
  if (!point) throw IdentifiabilityError("degenerate on-site sample: no spread, sigma_H is not identifiable");

  // Exact intervals for inverse-Gaussian samples: n lambda / lambda_hat is
  // chi-square with n - 1 degrees of freedom, and
  // sqrt(n (n - 1)) |mean - mu| / (mu sqrt(mean V)) is |t| with n - 1 degrees,
  // where V = sum(1/t_i - 1/mean) = n / lambda_hat.
  const double n = static_cast<double>(los.size());
  const double mean = point->mu;
  const double shape = 1.0 / point->inv_shape;
  const double tail = 0.5 * (1.0 - opts.level);
  const boost::math::chi_squared chi2(n - 1.0);
  const double shape_lo = shape * boost::math::quantile(chi2, tail) / n;
  const double shape_hi = shape * boost::math::quantile(boost::math::complement(chi2, tail)) / n;
  const double t = boost::math::quantile(boost::math::complement(boost::math::students_t(n - 1.0), tail));
  const double c = t * std::sqrt(mean * (n / shape) / (n * (n - 1.0)));

  // standard errors from the Fisher information, mapped by the delta method
  const double se_mu = std::sqrt(mean * mean * mean / (n * shape));
  const double se_shape = shape * std::sqrt(2.0 / n);

  OnsiteFit f;
  f.ig_mu = {mean, se_mu, mean / (1.0 + c), c < 1.0 ? mean / (1.0 - c) : kInf};
  f.ig_shape = {shape, se_shape, shape_lo, shape_hi};
  const double theta = x / mean;
  f.theta_H = {theta, theta * se_mu / mean, theta * std::max(0.0, 1.0 - c), theta * (1.0 + c)};
  const double sigma = x / std::sqrt(shape);
  f.sigma_H = {sigma, 0.5 * sigma * se_shape / shape, x / std::sqrt(shape_hi), x / std::sqrt(shape_lo)};
  f.n = los.size();
  return f;
}

TravelFit fit_travel(std::span<const TravelObservation> obs, const BootstrapOptions& opts) {
  check_options(opts);
  if (obs.empty()) throw ValidationError("travel fit needs at least one observation");
  for (const auto& o : obs) {
    if (!(o.T > 0.0) || !std::isfinite(o.before) || !std::isfinite(o.after)) {
      throw ValidationError("travel observations need finite scores and T > 0");
    }
  }
  auto rate = [&](std::span<const std::size_t> idx) {
    double change = 0.0;
    double time = 0.0;
    for (std::size_t i : idx) {
      change += obs[i].after - obs[i].before;
      time += obs[i].T;
    }
    return change / time;
  };
  const auto all = identity_index(obs.size());
  const auto [est, used] =
      bootstrap<1>(obs.size(), {rate(all)}, opts,
                   [&](std::span<const std::size_t> idx) -> std::optional<std::array<double, 1>> {
                     return std::array<double, 1>{rate(idx)};
                   });
  (void)used;
  TravelFit f;
  f.theta_T = est[0];
  f.n = obs.size();
  f.negative_deterioration = f.theta_T.value <= 0.0;
  return f;
}

TravelFit fit_travel(std::span<const std::pair<double, double>> pairs, double T,
                     const BootstrapOptions& opts) {
  std::vector<TravelObservation> obs;
  obs.reserve(pairs.size());
  for (const auto& [before, after] : pairs) obs.push_back({before, after, T});
  return fit_travel(obs, opts);
}

RemoteFit fit_remote(std::span<const double> los, std::span<const std::uint8_t> called_in, double x,
                     double a, const BootstrapOptions& opts) {
  check_options(opts);
  if (los.empty()) throw ValidationError("remote fit needs at least one episode");
  if (los.size() != called_in.size()) throw ValidationError("one outcome flag is needed per episode");
  if (!(x > 0.0) || !(a > 0.0)) throw ValidationError("x and a must be > 0");
  for (double t : los) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("remote lengths of stay must be >= 0");
  }
  auto moments = [&](std::span<const std::size_t> idx) {
    double calls = 0.0;
    double sum = 0.0;
    for (std::size_t i : idx) {
      calls += called_in[i] ? 1.0 : 0.0;
      sum += los[i];
    }
    const auto n = static_cast<double>(idx.size());
    return std::pair{calls / n, sum / n};
  };
  const auto all = identity_index(los.size());
  const auto [fraction, mean] = moments(all);
  const RemoteMoments m = remote_moments(fraction, mean, x, a);

  const auto [est, used] = bootstrap<3>(
      los.size(), {m.theta_R, m.sigma_R, m.rho}, opts,
      [&](std::span<const std::size_t> idx) -> std::optional<std::array<double, 3>> {
        const auto [f, mu] = moments(idx);
        try {
          const RemoteMoments r = remote_moments(f, mu, x, a);
          return std::array<double, 3>{r.theta_R, r.sigma_R, r.rho};
        } catch (const IdentifiabilityError&) {
          return std::nullopt;
        }
      });
  RemoteFit f;
  f.theta_R = est[0];
  f.sigma_R = est[1];
  f.rho = est[2];
  f.call_in_fraction = fraction;
  f.mean_los = mean;
  f.residual_prob = std::abs(call_in_prob(m.rho, x, a) - fraction);
  f.residual_mean = std::abs(elos_remote(m.rho, m.theta_R, x, a) - mean);
  f.n = los.size();
  f.resamples_used = used;
  return f;
}

std::vector<EpisodeRecord> read_episodes_csv(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::vector<std::size_t>> order;
  std::vector<EpisodeRecord> rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();

    if (!order) {
      order.emplace();
      for (const char* col : kCsvColumns) {
        const auto it = std::find(fields.begin(), fields.end(), col);
        if (it == fields.end()) throw ValidationError(std::string("CSV header lacks column '") + col + "'");
        order->push_back(static_cast<std::size_t>(it - fields.begin()));
      }
      if (fields.size() != std::size(kCsvColumns)) throw ValidationError("CSV header has unknown columns");
      continue;
    }
    if (fields.size() != std::size(kCsvColumns)) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(std::size(kCsvColumns)) + " fields");
    }
    auto col = [&](std::size_t c) -> const std::string& { return fields[(*order)[c]]; };
    EpisodeRecord r;
    const double type = parse_number(col(0), line_no, kCsvColumns[0]);
    if (!std::isfinite(type) || type != std::floor(type)) {
      throw ValidationError("line " + std::to_string(line_no) + ": type must be an integer");
    }
    r.type = static_cast<int>(type);
    r.station = col(1);
    if (r.station != "onsite" && r.station != "remote" && r.station != "travel") {
      throw ValidationError("line " + std::to_string(line_no) + ": unknown station '" + r.station + "'");
    }
    r.los = parse_number(col(2), line_no, kCsvColumns[2]);
    const double flag = parse_number(col(3), line_no, kCsvColumns[3]);
    if (r.station == "remote" && flag != 0.0 && flag != 1.0) {
      throw ValidationError("line " + std::to_string(line_no) + ": called_in must be 0 or 1");
    }
    r.called_in = flag == 1.0;
    r.score_before_travel = parse_number(col(4), line_no, kCsvColumns[4]);
    r.score_after_travel = parse_number(col(5), line_no, kCsvColumns[5]);
    r.T = parse_number(col(6), line_no, kCsvColumns[6]);
    rows.push_back(std::move(r));
  }
  if (!order) throw ValidationError("CSV input is empty");
  if (rows.empty()) throw ValidationError("CSV input has no data rows");
  return rows;
}

void write_episodes_csv(std::ostream& os, std::span<const EpisodeRecord> rows) {
  for (std::size_t c = 0; c < std::size(kCsvColumns); ++c) os << (c ? "," : "") << kCsvColumns[c];
  os << '\n';
  const auto old_precision = os.precision(10);
  auto num = [&](double v) {
    if (std::isfinite(v)) os << v;
  };
  for (const auto& r : rows) {
    os << r.type << ',' << r.station << ',';
    num(r.los);
    os << ',';
    if (r.station == "remote") os << (r.called_in ? 1 : 0);
    os << ',';
    num(r.score_before_travel);
    os << ',';
    num(r.score_after_travel);
    os << ',';
    num(r.T);
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace hybridcare
