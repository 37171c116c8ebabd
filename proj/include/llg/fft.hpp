#pragma once

// Thin RAII layer over FFTW3.
//
// Plans are created once per shape, cached process-wide, and executed only
// through the new-array interface, which FFTW documents as thread-safe. All
// arrays handed to FFTW come from fftw_malloc so they share the alignment
// the plans were made with.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <stdexcept>
#include <algorithm>
#include <tuple>
#include <utility>
#include <vector>

namespace llg::fft {

template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (!p && n != 0) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }
  friend bool operator==(const FftwAllocator&, const FftwAllocator&) { return true; }
};

using RealBuffer = std::vector<double, FftwAllocator<double>>;
using ComplexBuffer = std::vector<std::complex<double>, FftwAllocator<std::complex<double>>>;

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline unsigned planner_flags(std::size_t total) {
  // Measuring pays off only for the large 3D transforms reused every step.
  return total >= (1u << 15) ? FFTW_MEASURE : FFTW_ESTIMATE;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

/// Shape given slowest-first (FFTW row-major), with unit extents removed.
using Shape = std::vector<int>;

inline std::size_t volume(const Shape& s) {
  std::size_t v = 1;
  for (int n : s) v *= static_cast<std::size_t>(n);
  return v;
}

/// Forward DCT-II and backward DCT-III over every axis of `shape`.
/// Unnormalized: backward(forward(x)) = x * prod(2 n).
class DctPlan {
 public:
  explicit DctPlan(Shape shape) : shape_(std::move(shape)), size_(volume(shape_)) {
    if (shape_.empty()) return;
    RealBuffer a(size_), b(size_);
    std::vector<fftw_r2r_kind> fwd(shape_.size(), FFTW_REDFT10), bwd(shape_.size(), FFTW_REDFT01);
    std::lock_guard lock(planner_mutex());
    const unsigned flags = planner_flags(size_);
    forward_.reset(fftw_plan_r2r(int(shape_.size()), shape_.data(), a.data(), b.data(), fwd.data(), flags));
    backward_.reset(fftw_plan_r2r(int(shape_.size()), shape_.data(), a.data(), b.data(), bwd.data(), flags));
    if (!forward_ || !backward_) throw std::runtime_error("DctPlan: FFTW planning failed");
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return size_; }
  double normalization() const {
    double n = 1.0;
    for (int s : shape_) n *= 2.0 * s;
    return n;
  }

  void forward(double* in, double* out) const {
    if (forward_) fftw_execute_r2r(forward_.get(), in, out);
    else out[0] = in[0];
  }
  void backward(double* in, double* out) const {
    if (backward_) fftw_execute_r2r(backward_.get(), in, out);
    else out[0] = in[0];
  }

 private:
  Shape shape_;
  std::size_t size_;
  PlanHandle forward_, backward_;
};

/// Real-to-complex forward and complex-to-real backward 3D transforms.
/// Unnormalized: backward(forward(x)) = x * size.
class RealFftPlan {
 public:
  explicit RealFftPlan(Shape shape) : shape_(std::move(shape)), size_(volume(shape_)) {
    if (shape_.empty()) throw std::invalid_argument("RealFftPlan: empty shape");
    spectral_size_ = size_ / static_cast<std::size_t>(shape_.back()) * (shape_.back() / 2 + 1);
    RealBuffer r(size_);
    ComplexBuffer c(spectral_size_);
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    std::lock_guard lock(planner_mutex());
    const unsigned flags = planner_flags(size_);
    forward_.reset(fftw_plan_dft_r2c(int(shape_.size()), shape_.data(), r.data(), cp, flags));
    backward_.reset(fftw_plan_dft_c2r(int(shape_.size()), shape_.data(), cp, r.data(), flags));
    if (!forward_ || !backward_) throw std::runtime_error("RealFftPlan: FFTW planning failed");
  }

  std::size_t size() const { return size_; }
  std::size_t spectral_size() const { return spectral_size_; }

  void forward(double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(forward_.get(), in, reinterpret_cast<fftw_complex*>(out));
  }
  /// Destroys the contents of `in`.
  void backward(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(backward_.get(), reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  Shape shape_;
  std::size_t size_;
  std::size_t spectral_size_ = 0;
  PlanHandle forward_, backward_;
};

/// Real-to-complex transform of a zero-padded array whose nonzero entries
/// lie in the leading box `box` of `shape` (both slowest-first), and the
/// inverse restricted to that box. Spectra match RealFftPlan's layout.
/// Transforms skip rows that are entirely padding on the way in and rows
/// that are discarded on the way out.
class PaddedRealFft {
 public:
  PaddedRealFft(Shape shape, Shape box) : shape_(std::move(shape)), box_(std::move(box)) {
    const int r = static_cast<int>(shape_.size());
    if (r == 0 || box_.size() != shape_.size()) throw std::invalid_argument("PaddedRealFft: bad shape");
    for (int a = 0; a < r; ++a)
      if (box_[a] < 1 || box_[a] > shape_[a]) throw std::invalid_argument("PaddedRealFft: box exceeds shape");
    real_stride_.assign(r, 1);
    spec_stride_.assign(r, 1);
    spec_extent_ = shape_;
    spec_extent_[r - 1] = shape_[r - 1] / 2 + 1;
    for (int a = r - 2; a >= 0; --a) {
      real_stride_[a] = real_stride_[a + 1] * shape_[a + 1];
      spec_stride_[a] = spec_stride_[a + 1] * spec_extent_[a + 1];
    }
    size_ = volume(shape_);
    spectral_size_ = volume(spec_extent_);

    RealBuffer re(size_);
    ComplexBuffer sp(spectral_size_);
    auto* cp = reinterpret_cast<fftw_complex*>(sp.data());
    std::lock_guard lock(planner_mutex());
    const unsigned flags = planner_flags(size_);

    // Last axis: real rows inside the box.
    std::vector<fftw_iodim> rows;
    for (int a = 0; a < r - 1; ++a) rows.push_back({box_[a], int(real_stride_[a]), int(spec_stride_[a])});
    fftw_iodim line{shape_[r - 1], 1, 1};
    r2c_.reset(fftw_plan_guru_dft_r2c(1, &line, int(rows.size()), rows.data(), re.data(), cp, flags));
    std::vector<fftw_iodim> rows_back;
    for (int a = 0; a < r - 1; ++a) rows_back.push_back({box_[a], int(spec_stride_[a]), int(real_stride_[a])});
    c2r_.reset(fftw_plan_guru_dft_c2r(1, &line, int(rows_back.size()), rows_back.data(), cp, re.data(), flags));
    if (!r2c_ || !c2r_) throw std::runtime_error("PaddedRealFft: FFTW planning failed");

    // Remaining axes, in place on the spectrum: the slower axes are
    // restricted to the box, the faster ones run over the full extent.
    for (int a = r - 2; a >= 0; --a) {
      std::vector<fftw_iodim> many;
      for (int b = 0; b < r; ++b) {
        if (b == a) continue;
        const int extent = b < a ? box_[b] : spec_extent_[b];
        many.push_back({extent, int(spec_stride_[b]), int(spec_stride_[b])});
      }
      fftw_iodim ax{shape_[a], int(spec_stride_[a]), int(spec_stride_[a])};
      Pass pass;
      pass.axis = a;
      pass.forward.reset(fftw_plan_guru_dft(1, &ax, int(many.size()), many.data(), cp, cp, FFTW_FORWARD, flags));
      pass.backward.reset(fftw_plan_guru_dft(1, &ax, int(many.size()), many.data(), cp, cp, FFTW_BACKWARD, flags));
      if (!pass.forward || !pass.backward) throw std::runtime_error("PaddedRealFft: FFTW planning failed");
      passes_.push_back(std::move(pass));
    }
  }

  std::size_t size() const { return size_; }
  std::size_t spectral_size() const { return spectral_size_; }

  /// Reads only the box of `in`; everything outside is taken as zero.
  /// Overwrites the padded tails of box rows.
  void forward(double* in, std::complex<double>* out) const {
    auto* cp = reinterpret_cast<fftw_complex*>(out);
    clear_row_tails(in);
    fftw_execute_dft_r2c(r2c_.get(), in, cp);
    for (const Pass& p : passes_) {
      zero_padding(out, p.axis);
      fftw_execute_dft(p.forward.get(), cp, cp);
    }
  }

  /// Writes only the box of `out`; destroys `in`.
  void backward(std::complex<double>* in, double* out) const {
    auto* cp = reinterpret_cast<fftw_complex*>(in);
    for (auto it = passes_.rbegin(); it != passes_.rend(); ++it) fftw_execute_dft(it->backward.get(), cp, cp);
    fftw_execute_dft_c2r(c2r_.get(), cp, out);
  }

 private:
  struct Pass {
    int axis;
    PlanHandle forward, backward;
  };

  // The r2c pass reads whole rows, so the padded tail of each box row must be zero.
  void clear_row_tails(double* data) const {
    const int r = static_cast<int>(shape_.size());
    const std::size_t begin = static_cast<std::size_t>(box_[r - 1]), end = static_cast<std::size_t>(shape_[r - 1]);
    if (begin == end) return;
    std::vector<int> idx(r - 1, 0);
    while (true) {
      std::size_t base = 0;
      for (int b = 0; b < r - 1; ++b) base += idx[b] * real_stride_[b];
      std::fill(data + base + begin, data + base + end, 0.0);
      int b = r - 2;
      while (b >= 0 && ++idx[b] == box_[b]) idx[b--] = 0;
      if (b < 0) break;
    }
  }

  // Clears entries with index >= box along `axis`, box-restricted on the
  // slower axes and full on the faster ones.
  void zero_padding(std::complex<double>* data, int axis) const {
    const std::size_t inner = spec_stride_[axis];
    const std::size_t begin = static_cast<std::size_t>(box_[axis]) * inner;
    const std::size_t end = static_cast<std::size_t>(shape_[axis]) * inner;
    if (begin == end) return;
    std::vector<int> idx(axis, 0);
    while (true) {
      std::size_t base = 0;
      for (int b = 0; b < axis; ++b) base += idx[b] * spec_stride_[b];
      std::fill(data + base + begin, data + base + end, std::complex<double>(0.0, 0.0));
      int b = axis - 1;
      while (b >= 0 && ++idx[b] == box_[b]) idx[b--] = 0;
      if (b < 0) break;
    }
  }

  Shape shape_, box_, spec_extent_;
  std::vector<std::size_t> real_stride_, spec_stride_;
  std::size_t size_ = 0, spectral_size_ = 0;
  PlanHandle r2c_, c2r_;
  std::vector<Pass> passes_;
};

namespace detail {
template <class Plan>
std::shared_ptr<const Plan> cached(const Shape& shape) {
  static std::mutex cache_mutex;
  static std::map<Shape, std::shared_ptr<const Plan>> cache;
  std::lock_guard lock(cache_mutex);
  auto it = cache.find(shape);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const Plan>(shape);
  cache.emplace(shape, plan);
  return plan;
}
}  // namespace detail

inline std::shared_ptr<const DctPlan> dct_plan(const Shape& shape) { return detail::cached<DctPlan>(shape); }
inline std::shared_ptr<const RealFftPlan> real_fft_plan(const Shape& shape) {
  return detail::cached<RealFftPlan>(shape);
}
inline std::shared_ptr<const PaddedRealFft> padded_real_fft(const Shape& shape, const Shape& box) {
  static std::mutex cache_mutex;
  static std::map<std::pair<Shape, Shape>, std::shared_ptr<const PaddedRealFft>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[{shape, box}];
  if (!slot) slot = std::make_shared<const PaddedRealFft>(shape, box);
  return slot;
}

}  // namespace llg::fft
