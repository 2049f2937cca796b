#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "esgnn/rng.hpp"

namespace esgnn {

// Stochastic parameters of a random resistor array. Cells either undergo
// dielectric breakdown (conductance ~ Normal(g_on_mean, g_on_std), truncated
// below at g_off) or stay insulating at g_off. All conductances in uS.
struct DeviceModel {
  double p_break = 0.5;
  double g_on_mean = 150.0;
  double g_on_std = 30.0;
  double g_off = 1.0;
  double read_noise_std = 0.01;  // relative, per current term

  void validate() const;  // throws ConfigError on violated invariants
};

// Immutable conductance matrix. The elementwise square is precomputed so
// that read-noise variance reads are a single matvec.
class CrossbarArray {
 public:
  explicit CrossbarArray(Eigen::MatrixXd conductance);

  Eigen::Index rows() const { return g_.rows(); }
  Eigen::Index cols() const { return g_.cols(); }
  const Eigen::MatrixXd& conductance() const { return g_; }
  const Eigen::MatrixXd& conductance_sq() const { return g_sq_; }

 private:
  Eigen::MatrixXd g_;
  Eigen::MatrixXd g_sq_;
};

// Input quantization for bit-serial reads: values in [0, x_max] map to
// m-bit codes, one crossbar read per bit plane at v_read volts.
struct QuantConfig {
  int m_bits = 4;
  double v_read = 0.3;
  double x_max = 1.0;

  int levels() const { return (1 << m_bits) - 1; }
  void validate() const;
};

CrossbarArray form_random_array(int rows, int cols, const DeviceModel& model,
                                std::uint64_t seed);

struct VmmStats {
  std::uint64_t clamped = 0;   // inputs outside [0, x_max]
  std::uint64_t mac_count = 0; // logical crossbar MACs (rows*cols per read)

  VmmStats& operator+=(const VmmStats& o) {
    clamped += o.clamped;
    mac_count += o.mac_count;
    return *this;
  }
};

// Round-to-nearest codes, ties up; inputs clamped to [0, x_max].
Eigen::VectorXd quantize_to_codes(const Eigen::VectorXd& x,
                                  const QuantConfig& q,
                                  std::uint64_t* clamped = nullptr);

// Bit-serial analogue VMM. Returns the conductance-weighted sum G*x in
// uS * (input units): codes are driven plane by plane at v_read, per-row
// currents divided by v_read, accumulated with 2^k significance and
// rescaled by x_max/(2^m-1). With noise_rng == nullptr the read is clean
// and (for on-grid x) equals the exact product G*x up to round-off.
// Read noise is multiplicative per current term, resampled per bit plane;
// the per-row aggregate is drawn as one Gaussian with the exact summed
// variance sigma^2 * sum_j (G_ij b_j)^2, which is the same distribution.
Eigen::VectorXd analog_vmm(const CrossbarArray& array, const Eigen::VectorXd& x,
                           const QuantConfig& q, double read_noise_std = 0.0,
                           Rng* noise_rng = nullptr,
                           VmmStats* stats = nullptr);

// rho(scale * G) by power iteration (relative tolerance 1e-8). Valid for
// nonnegative matrices, where the dominant eigenvalue is the real Perron
// root. Throws ShapeError for non-square, NumericalError on stagnation.
double spectral_radius(const CrossbarArray& array, double scale);
double spectral_radius(const Eigen::MatrixXd& m, double scale);

// CSV (row-major, uS, 9 significant digits) plus a JSON sidecar holding
// the device model and generation seed.
void save_array(const std::filesystem::path& csv_path,
                const CrossbarArray& array, const DeviceModel& model,
                std::uint64_t seed);
CrossbarArray load_array(const std::filesystem::path& csv_path,
                         DeviceModel* model = nullptr,
                         std::uint64_t* seed = nullptr);

}  // namespace esgnn
