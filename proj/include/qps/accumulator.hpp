// Mergeable block accumulator for complex-weighted observables.
//
// Samples are vectors of complex channels. Consecutive samples are summed
// into blocks of fixed length; error bars of any smooth function of the
// channel means come from a delete-one-block jackknife, so they account for
// autocorrelation shorter than a block and for the nonlinearity of ratio
// estimators.

#ifndef QPS_ACCUMULATOR_HPP
#define QPS_ACCUMULATOR_HPP

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "qps/core.hpp"

namespace qps {

/// Value with jackknife errors on its real and imaginary parts.
struct Estimate {
  Complex value{};
  double error = std::numeric_limits<double>::quiet_NaN();
  double error_imag = std::numeric_limits<double>::quiet_NaN();
  long n_samples = 0;

  double real() const { return value.real(); }
  double imag() const { return value.imag(); }
  /// Imaginary residual consistent with zero at k standard errors.
  bool imag_consistent(double k = 3.0) const {
    return std::abs(value.imag()) <= k * error_imag || std::abs(value.imag()) <= 1e-12 * (1.0 + std::abs(value));
  }
};

/// a / b with real and imaginary parts formed so that
/// cdiv(conj a, conj b) == conj(cdiv(a, b)) bit for bit.
inline Complex cdiv(Complex a, Complex b) {
  const double den = b.real() * b.real() + b.imag() * b.imag();
  return {(a.real() * b.real() + a.imag() * b.imag()) / den, (a.imag() * b.real() - a.real() * b.imag()) / den};
}

class Accumulator {
 public:
  explicit Accumulator(std::size_t channels = 0, std::size_t block_size = 100)
      : channels_(channels), block_size_(block_size), current_(channels, Complex{}) {
    if (block_size == 0) throw std::invalid_argument("Accumulator: block_size must be positive");
  }

  std::size_t channels() const { return channels_; }
  std::size_t block_size() const { return block_size_; }
  long count() const { return count_; }
  bool empty() const { return count_ == 0; }
  /// Completed blocks plus the partial one, if any.
  std::size_t blocks() const { return counts_.size() + (current_count_ > 0); }

  void add(std::span<const Complex> x) {
    if (x.size() != channels_) throw std::invalid_argument("Accumulator::add: channel count mismatch");
    for (std::size_t k = 0; k < channels_; ++k) current_[k] += x[k];
    ++current_count_;
    ++count_;
    if (current_count_ == static_cast<long>(block_size_)) flush();
  }

  /// Appends the blocks of `o` after this accumulator's blocks. A partial
  /// block on either side becomes a block of its own.
  void merge(const Accumulator& o) {
    if (o.channels_ != channels_) throw std::invalid_argument("Accumulator::merge: channel count mismatch");
    if (current_count_ > 0) flush();
    sums_.insert(sums_.end(), o.sums_.begin(), o.sums_.end());
    counts_.insert(counts_.end(), o.counts_.begin(), o.counts_.end());
    if (o.current_count_ > 0) {
      sums_.insert(sums_.end(), o.current_.begin(), o.current_.end());
      counts_.push_back(o.current_count_);
    }
    count_ += o.count_;
  }

  /// Channel totals, summed block by block in order.
  std::vector<Complex> totals() const {
    std::vector<Complex> t(channels_, Complex{});
    for (std::size_t b = 0; b < counts_.size(); ++b)
      for (std::size_t k = 0; k < channels_; ++k) t[k] += sums_[b * channels_ + k];
    if (current_count_ > 0)
      for (std::size_t k = 0; k < channels_; ++k) t[k] += current_[k];
    return t;
  }

  std::vector<Complex> means() const {
    auto t = totals();
    if (count_ == 0) throw std::invalid_argument("Accumulator: no samples");
    for (auto& v : t) v /= static_cast<double>(count_);
    return t;
  }

  /// Estimate of f(channel means) with delete-one-block jackknife errors.
  template <class F>
  Estimate jackknife(F&& f) const {
    if (count_ == 0) throw std::invalid_argument("Accumulator: no samples");
    Estimate e;
    e.n_samples = count_;
    const auto total = totals();
    std::vector<Complex> m(channels_);
    for (std::size_t k = 0; k < channels_; ++k) m[k] = total[k] / static_cast<double>(count_);
    e.value = f(std::span<const Complex>(m));
    const std::size_t nb = blocks();
    if (nb < 2) return e;
    std::vector<Complex> loo(nb);
    Complex mean_loo{};
    for (std::size_t b = 0; b < nb; ++b) {
      const bool partial = b == counts_.size();
      const long nbk = partial ? current_count_ : counts_[b];
      const Complex* sb = partial ? current_.data() : sums_.data() + b * channels_;
      const double rest = static_cast<double>(count_ - nbk);
      for (std::size_t k = 0; k < channels_; ++k) m[k] = (total[k] - sb[k]) / rest;
      loo[b] = f(std::span<const Complex>(m));
      mean_loo += loo[b];
    }
    mean_loo /= static_cast<double>(nb);
    double vr = 0.0, vi = 0.0;
    for (const auto& v : loo) {
      vr += (v.real() - mean_loo.real()) * (v.real() - mean_loo.real());
      vi += (v.imag() - mean_loo.imag()) * (v.imag() - mean_loo.imag());
    }
    const double scale = static_cast<double>(nb - 1) / static_cast<double>(nb);
    e.error = std::sqrt(scale * vr);
    e.error_imag = std::sqrt(scale * vi);
    return e;
  }

  Estimate mean(std::size_t k) const {
    return jackknife([k](std::span<const Complex> m) { return m[k]; });
  }

  /// Ratio of channel means, num / den.
  Estimate ratio(std::size_t num, std::size_t den) const {
    return jackknife([=](std::span<const Complex> m) { return cdiv(m[num], m[den]); });
  }

 private:
  void flush() {
    sums_.insert(sums_.end(), current_.begin(), current_.end());
    counts_.push_back(current_count_);
    std::fill(current_.begin(), current_.end(), Complex{});
    current_count_ = 0;
  }

  std::size_t channels_;
  std::size_t block_size_;
  std::vector<Complex> sums_;  // block-major
  std::vector<long> counts_;
  std::vector<Complex> current_;
  long current_count_ = 0;
  long count_ = 0;
};

}  // namespace qps

#endif  // QPS_ACCUMULATOR_HPP
