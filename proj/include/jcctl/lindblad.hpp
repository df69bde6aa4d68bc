#pragma once

// Markov Lindblad dynamics
//
//   d rho/dt = -i[H, rho] + sum_n L_n rho L_n^dag - {L_n^dag L_n, rho} / 2
//
// and dense storage of forward trajectories for the reversal.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "jcctl/jc_model.hpp"
#include "jcctl/leo_qsd.hpp"
#include "jcctl/quantum_core.hpp"

namespace jcctl {

struct LindbladModel {
  ComplexMatrix H;
  std::vector<ComplexMatrix> lindblads;

  Eigen::Index dim() const { return H.rows(); }

  void validate() const {
    if (H.rows() != H.cols() || H.rows() == 0) {
      throw ValidationError("LindbladModel: H must be square and non-empty");
    }
    if (hermitian_deviation(H) > 1e-12) {
      throw ValidationError("LindbladModel: H is not Hermitian");
    }
    for (const auto& l : lindblads) {
      if (l.rows() != H.rows() || l.cols() != H.cols()) {
        throw ValidationError("LindbladModel: Lindblad operator dimension mismatch");
      }
    }
  }
};

/// H_s with the single cavity-loss channel L = lambda a.
inline LindbladModel jc_lindblad_model(const JCParams& p) {
  return {build_system_hamiltonian(p), {build_lindblad(p)}};
}

/// Evaluated as Y + Y^dag with Y = -iH rho + sum_n (L rho L^dag - L^dag L rho) / 2,
/// so the result is exactly Hermitian.
inline ComplexMatrix lindblad_derivative(const ComplexMatrix& rho, const LindbladModel& m) {
  ComplexMatrix y = -kI * (m.H * rho);
  for (const auto& l : m.lindblads) {
    y.noalias() += 0.5 * (l * rho * l.adjoint());
    y.noalias() -= 0.5 * (l.adjoint() * l * rho);
  }
  return y + y.adjoint();
}

inline ComplexMatrix lindblad_derivative(const DensityState& rho, const LindbladModel& m) {
  return lindblad_derivative(rho.matrix(), m);
}

/// Generator on column-stacked vec(rho): vec(A X B) = (B^T (x) A) vec(X).
inline ComplexMatrix lindblad_superoperator(const LindbladModel& m) {
  m.validate();
  const Eigen::Index d = m.dim();
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  ComplexMatrix s = -kI * (kron(id, m.H) - kron(m.H.transpose(), id));
  for (const auto& l : m.lindblads) {
    const ComplexMatrix ldl = l.adjoint() * l;
    s += kron(l.conjugate(), l) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id);
  }
  return s;
}

/// One classical RK4 step of size h for a time-independent generator.
inline ComplexMatrix lindblad_rk4_step(const ComplexMatrix& rho, const LindbladModel& m,
                                       double h) {
  const ComplexMatrix k1 = lindblad_derivative(rho, m);
  const ComplexMatrix k2 = lindblad_derivative(rho + 0.5 * h * k1, m);
  const ComplexMatrix k3 = lindblad_derivative(rho + 0.5 * h * k2, m);
  const ComplexMatrix k4 = lindblad_derivative(rho + h * k3, m);
  return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Random-access sequence of equal-size matrices. Kept in memory up to
/// `spill_threshold` entries; past that, everything is moved to a file of
/// fixed-width text records (one CSV line per state: index, then real and
/// imaginary parts in row-major order).
class StateStore {
 public:
  explicit StateStore(std::size_t spill_threshold = 1'000'000,
                      std::filesystem::path spill_dir = std::filesystem::temp_directory_path())
      : threshold_(spill_threshold), dir_(std::move(spill_dir)) {}

  StateStore(StateStore&&) noexcept = default;
  StateStore& operator=(StateStore&&) noexcept = default;
  StateStore(const StateStore&) = delete;
  StateStore& operator=(const StateStore&) = delete;

  ~StateStore() {
    if (file_) {
      file_.reset();
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
  }

  std::size_t size() const noexcept { return count_; }
  bool spilled() const noexcept { return static_cast<bool>(file_); }

  void push_back(const ComplexMatrix& m) {
    if (count_ == 0) dim_ = m.rows();
    if (m.rows() != dim_ || m.cols() != dim_) {
      throw ValidationError("StateStore: matrix dimension mismatch");
    }
    if (!file_ && count_ + 1 > threshold_) spill();
    if (file_) {
      write_record(count_, m);
    } else {
      mem_.push_back(m);
    }
    ++count_;
  }

  ComplexMatrix operator[](std::size_t i) const {
    if (i >= count_) throw std::out_of_range("StateStore: index out of range");
    if (!file_) return mem_[i];
    return read_record(i);
  }

 private:
  static constexpr int kFieldWidth = 25;  // separator plus "%+.17e"

  // two-digit exponents keep the records fixed-width
  static double representable(double x) { return std::abs(x) < 1e-99 ? 0.0 : x; }

  std::size_t record_size() const {
    return 20 + 1 + static_cast<std::size_t>(2 * dim_ * dim_) * kFieldWidth;
  }

  void spill() {
    static std::uint64_t serial = 0;
    path_ = dir_ / ("jcctl-states-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) +
                    "-" + std::to_string(serial++) + ".csv");
    file_ = std::make_unique<std::fstream>(
        path_, std::ios::in | std::ios::out | std::ios::trunc | std::ios::binary);
    if (!*file_) throw std::runtime_error("StateStore: cannot open spill file " + path_.string());
    for (std::size_t i = 0; i < mem_.size(); ++i) write_record(i, mem_[i]);
    mem_.clear();
    mem_.shrink_to_fit();
  }

  void write_record(std::size_t i, const ComplexMatrix& m) {
    std::string line;
    line.reserve(record_size());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%020zu", i);
    line += buf;
    for (Eigen::Index r = 0; r < dim_; ++r) {
      for (Eigen::Index c = 0; c < dim_; ++c) {
        std::snprintf(buf, sizeof buf, ",%+.17e", representable(m(r, c).real()));
        line += buf;
        std::snprintf(buf, sizeof buf, ",%+.17e", representable(m(r, c).imag()));
        line += buf;
      }
    }
    line += '\n';
    file_->seekp(static_cast<std::streamoff>(i * record_size()));
    file_->write(line.data(), static_cast<std::streamsize>(line.size()));
  }

  ComplexMatrix read_record(std::size_t i) const {
    std::string line(record_size(), '\0');
    file_->seekg(static_cast<std::streamoff>(i * record_size()));
    file_->read(line.data(), static_cast<std::streamsize>(line.size()));
    if (!*file_) throw std::runtime_error("StateStore: short read from spill file");
    ComplexMatrix m(dim_, dim_);
    const char* p = line.data() + 20;
    for (Eigen::Index r = 0; r < dim_; ++r) {
      for (Eigen::Index c = 0; c < dim_; ++c) {
        const double re = std::strtod(p + 1, nullptr);
        p += kFieldWidth;
        const double im = std::strtod(p + 1, nullptr);
        p += kFieldWidth;
        m(r, c) = Complex(re, im);
      }
    }
    return m;
  }

  std::size_t threshold_;
  std::filesystem::path dir_;
  std::filesystem::path path_;
  std::vector<ComplexMatrix> mem_;
  std::unique_ptr<std::fstream> file_;
  std::size_t count_ = 0;
  Eigen::Index dim_ = 0;
};

struct ForwardTrajectory {
  double tau = 0.0;
  double dt = 0.0;
  StateStore states;

  std::size_t steps() const { return states.size() - 1; }
  double time(std::size_t i) const { return static_cast<double>(i) * dt; }
  DensityState state(std::size_t i) const { return DensityState::trusted(states[i]); }
};

struct ForwardOptions {
  std::size_t spill_threshold = 1'000'000;
  std::filesystem::path spill_dir = std::filesystem::temp_directory_path();
  Tolerances tolerances{};
};

/// RK4 at fixed dt, storing every step. Throws NumericalError at the first
/// state that leaves the admissible set.
inline ForwardTrajectory forward_propagate(const DensityState& rho0, const LindbladModel& m,
                                           double tau, double dt,
                                           const ForwardOptions& opt = {}) {
  m.validate();
  if (rho0.dim() != m.dim()) throw ValidationError("forward_propagate: dimension mismatch");
  const std::size_t n = detail::step_count(tau, dt, "forward_propagate");
  ForwardTrajectory out{tau, dt, StateStore(opt.spill_threshold, opt.spill_dir)};
  ComplexMatrix rho = rho0.matrix();
  out.states.push_back(rho);
  for (std::size_t i = 1; i <= n; ++i) {
    rho = lindblad_rk4_step(rho, m, dt);
    rho = 0.5 * (rho + rho.adjoint());
    if (auto why = density_violation(rho, opt.tolerances)) {
      throw NumericalError("forward_propagate: " + *why, static_cast<double>(i) * dt);
    }
    out.states.push_back(rho);
  }
  return out;
}

}  // namespace jcctl
