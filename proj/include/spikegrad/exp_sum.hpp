#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>

#include "spikegrad/error.hpp"

namespace spikegrad {

// f(t) = sum_k coef_k * exp(-rate_k * (t - origin)).
//
// Membrane potential minus adaptive threshold inside one inter-event segment
// has this form with at most four distinct rates (1/tau_m, 1/tau_s, 1/tau_a
// and the constant), so all of its roots can be isolated exactly: between two
// consecutive roots of f' the function is monotone.
class ExpSum {
 public:
  static constexpr std::size_t kMaxTerms = 6;

  struct Term {
    double coef;
    double rate;
  };

  explicit ExpSum(double origin = 0.0) : origin_(origin) {}

  double origin() const { return origin_; }
  std::span<const Term> terms() const { return {terms_.data(), n_}; }
  bool empty() const { return n_ == 0; }

  void add(double coef, double rate) {
    if (coef == 0.0) return;
    for (std::size_t k = 0; k < n_; ++k) {
      if (terms_[k].rate == rate) {
        terms_[k].coef += coef;
        return;
      }
    }
    if (n_ == kMaxTerms) throw std::length_error("ExpSum: too many distinct rates");
    terms_[n_++] = {coef, rate};
  }

  // Re-expresses the same function relative to a new origin.
  void rebase(double origin) {
    const double shift = origin - origin_;
    if (shift != 0.0) {
      for (std::size_t k = 0; k < n_; ++k) {
        if (terms_[k].rate != 0.0) terms_[k].coef *= std::exp(-terms_[k].rate * shift);
      }
    }
    origin_ = origin;
  }

  void clear(double origin) {
    n_ = 0;
    origin_ = origin;
  }

  double operator()(double t) const {
    const double s = t - origin_;
    double v = 0.0;
    for (std::size_t k = 0; k < n_; ++k) v += terms_[k].coef * std::exp(-terms_[k].rate * s);
    return v;
  }

  double derivative(double t) const {
    const double s = t - origin_;
    double v = 0.0;
    for (std::size_t k = 0; k < n_; ++k)
      v -= terms_[k].rate * terms_[k].coef * std::exp(-terms_[k].rate * s);
    return v;
  }

  // f'(t) * exp(pivot_rate * (t - origin)): same roots as f', one fewer
  // non-constant term.
  ExpSum scaled_derivative() const {
    ExpSum g(origin_);
    double pivot = 0.0;
    bool have_pivot = false;
    for (std::size_t k = 0; k < n_; ++k) {
      if (terms_[k].rate != 0.0) {
        pivot = terms_[k].rate;
        have_pivot = true;
        break;
      }
    }
    if (!have_pivot) return g;
    for (std::size_t k = 0; k < n_; ++k) {
      const double c = -terms_[k].rate * terms_[k].coef;
      if (c != 0.0) g.add(c, terms_[k].rate - pivot);
    }
    return g;
  }

 private:
  double origin_;
  std::array<Term, kMaxTerms> terms_{};
  std::size_t n_ = 0;
};

namespace detail {

struct RootList {
  std::array<double, ExpSum::kMaxTerms + 2> values{};
  std::size_t size = 0;
  void push(double v) {
    if (size < values.size()) values[size++] = v;
  }
  const double* begin() const { return values.data(); }
  const double* end() const { return values.data() + size; }
};

inline constexpr int kMaxRootIterations = 200;

// Root of f on [a, b] where f(a) and f(b) have opposite signs and f is
// monotone. Safeguarded Newton; converges to a few ulps.
inline double refine_root(const ExpSum& f, double a, double b) {
  double fa = f(a);
  const bool increasing = fa < 0.0;
  double x = a + 0.5 * (b - a);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int it = 0; it < kMaxRootIterations; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) == increasing) {
      a = x;
    } else {
      b = x;
    }
    const double scale = std::max(1.0, std::fabs(x));
    if (b - a <= 4.0 * eps * scale) return b;
    const double d = f.derivative(x);
    double next = x - fx / d;
    if (!(next > a && next < b) || d == 0.0 || !std::isfinite(next)) next = a + 0.5 * (b - a);
    if (std::fabs(next - x) <= 2.0 * eps * scale) return next;
    x = next;
  }
  throw RootNotConverged("root refinement did not converge within 200 iterations");
}

inline void collect_roots(const ExpSum& f, double lo, double hi, RootList& out, int depth) {
  std::size_t nonconstant = 0;
  for (const auto& t : f.terms()) nonconstant += (t.rate != 0.0);
  if (f.terms().size() <= 1 || nonconstant == 0 || depth > static_cast<int>(ExpSum::kMaxTerms)) return;
  RootList crit;
  collect_roots(f.scaled_derivative(), lo, hi, crit, depth + 1);
  double a = lo;
  double fa = f(a);
  auto visit = [&](double b) {
    const double fb = f(b);
    if (fb == 0.0) {
      if (b > lo && b < hi) out.push(b);
    } else if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      out.push(refine_root(f, a, b));
    }
    a = b;
    fa = fb;
  };
  for (double c : crit) visit(c);
  visit(hi);
}

}  // namespace detail

// All sign changes of f strictly inside (lo, hi), ascending.
inline detail::RootList roots_in(const ExpSum& f, double lo, double hi) {
  detail::RootList out;
  if (hi > lo) detail::collect_roots(f, lo, hi, out, 0);
  return out;
}

// Earliest t in (lo, hi] with f(t) >= 0, given f(lo) < 0.
inline std::optional<double> first_upcrossing(const ExpSum& f, double lo, double hi) {
  if (!(hi > lo)) return std::nullopt;
  detail::RootList crit;
  detail::collect_roots(f.scaled_derivative(), lo, hi, crit, 1);
  double a = lo;
  auto probe = [&](double b) -> std::optional<double> {
    const double fb = f(b);
    if (fb >= 0.0) {
      if (fb == 0.0) return b;
      return detail::refine_root(f, a, b);
    }
    a = b;
    return std::nullopt;
  };
  for (double c : crit) {
    if (auto r = probe(c)) return r;
  }
  return probe(hi);
}

}  // namespace spikegrad
