#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace spikegrad {

enum class KernelKind { CausalExponential, DoubleExponential };

inline std::string to_string(KernelKind kind) {
  return kind == KernelKind::CausalExponential ? "causal" : "double";
}

// One exponential component c * exp(-tau * rate) of a PSP kernel.
struct KernelTerm {
  double coef;
  double rate;  // per ms

  bool operator==(const KernelTerm&) const = default;
};

// Post-synaptic potential kernel. Instances are always valid: the factories
// reject non-positive constants and tau_s >= tau_m.
class KernelSpec {
 public:
  static KernelSpec causal(double tau_m) {
    if (!(tau_m > 0.0) || !std::isfinite(tau_m))
      throw std::invalid_argument("kernel: tau_m must be > 0, got " + std::to_string(tau_m));
    KernelSpec k(KernelKind::CausalExponential, tau_m, 0.0);
    k.terms_[0] = {1.0, 1.0 / tau_m};
    k.n_terms_ = 1;
    k.norm_ = 1.0;
    k.peak_time_ = 0.0;
    return k;
  }

  static KernelSpec double_exponential(double tau_m, double tau_s) {
    if (!(tau_m > 0.0) || !std::isfinite(tau_m))
      throw std::invalid_argument("kernel: tau_m must be > 0, got " + std::to_string(tau_m));
    if (!(tau_s > 0.0) || !(tau_s < tau_m))
      throw std::invalid_argument("kernel: need 0 < tau_s < tau_m, got tau_s=" +
                                  std::to_string(tau_s) + " tau_m=" + std::to_string(tau_m));
    KernelSpec k(KernelKind::DoubleExponential, tau_m, tau_s);
    k.peak_time_ = (tau_m * tau_s / (tau_m - tau_s)) * std::log(tau_m / tau_s);
    k.norm_ = 1.0 / (std::exp(-k.peak_time_ / tau_m) - std::exp(-k.peak_time_ / tau_s));
    k.terms_[0] = {k.norm_, 1.0 / tau_m};
    k.terms_[1] = {-k.norm_, 1.0 / tau_s};
    k.n_terms_ = 2;
    return k;
  }

  static KernelSpec make(KernelKind kind, double tau_m, double tau_s) {
    return kind == KernelKind::CausalExponential ? causal(tau_m) : double_exponential(tau_m, tau_s);
  }

  KernelKind kind() const { return kind_; }
  double tau_m() const { return tau_m_; }
  double tau_s() const { return tau_s_; }
  // Peak-normalization factor (1 for the causal kernel).
  double norm() const { return norm_; }
  // Location of the kernel maximum (0 for the causal kernel).
  double peak_time() const { return peak_time_; }
  bool is_causal() const { return kind_ == KernelKind::CausalExponential; }

  // The kernel written as a sum of decaying exponentials for tau >= 0.
  std::span<const KernelTerm> terms() const { return {terms_.data(), n_terms_}; }

  bool operator==(const KernelSpec&) const = default;

 private:
  KernelSpec(KernelKind kind, double tau_m, double tau_s) : kind_(kind), tau_m_(tau_m), tau_s_(tau_s) {}

  KernelKind kind_;
  double tau_m_;
  double tau_s_;
  double norm_ = 1.0;
  double peak_time_ = 0.0;
  std::array<KernelTerm, 2> terms_{};
  std::size_t n_terms_ = 0;
};

inline double psp(const KernelSpec& spec, double tau) {
  if (tau < 0.0) return 0.0;
  if (spec.is_causal()) return std::exp(-tau / spec.tau_m());
  return spec.norm() * (std::exp(-tau / spec.tau_m()) - std::exp(-tau / spec.tau_s()));
}

// d psp / d tau. At tau == 0 the causal kernel jumps; the right-limit slope
// -1/tau_m is returned and is_jump_point() reports the one-sidedness.
inline double psp_deriv(const KernelSpec& spec, double tau) {
  if (tau < 0.0) return 0.0;
  if (spec.is_causal()) return -std::exp(-tau / spec.tau_m()) / spec.tau_m();
  return spec.norm() * (std::exp(-tau / spec.tau_s()) / spec.tau_s() -
                        std::exp(-tau / spec.tau_m()) / spec.tau_m());
}

inline bool is_jump_point(const KernelSpec& spec, double tau) { return spec.is_causal() && tau == 0.0; }

}  // namespace spikegrad
