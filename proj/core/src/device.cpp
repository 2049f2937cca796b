#include "esgnn/device.hpp"

#include <cmath>

#include "esgnn/errors.hpp"
#include "esgnn/matrix_io.hpp"
#include "json.hpp"

namespace esgnn {

using nlohmann::json;

void DeviceModel::validate() const {
  if (!(p_break >= 0.0 && p_break <= 1.0))
    throw ConfigError("DeviceModel: p_break must be in [0,1]");
  if (g_on_std < 0.0) throw ConfigError("DeviceModel: g_on_std must be >= 0");
  if (read_noise_std < 0.0)
    throw ConfigError("DeviceModel: read_noise_std must be >= 0");
  if (!(g_on_mean - 3.0 * g_on_std > g_off))
    throw ConfigError(
        "DeviceModel: conductance gap violated (need g_on_mean - 3*g_on_std > "
        "g_off)");
}

CrossbarArray::CrossbarArray(Eigen::MatrixXd conductance)
    : g_(std::move(conductance)) {
  if (g_.rows() < 1 || g_.cols() < 1)
    throw ShapeError("CrossbarArray: empty matrix");
  if ((g_.array() < 0.0).any())
    throw ConfigError("CrossbarArray: negative conductance");
  g_sq_ = g_.cwiseProduct(g_);
}

void QuantConfig::validate() const {
  if (m_bits < 1) throw ConfigError("QuantConfig: m_bits must be >= 1");
  if (m_bits > 30) throw ConfigError("QuantConfig: m_bits too large");
  if (!(v_read > 0.0)) throw ConfigError("QuantConfig: v_read must be > 0");
  if (!(x_max > 0.0)) throw ConfigError("QuantConfig: x_max must be > 0");
}

CrossbarArray form_random_array(int rows, int cols, const DeviceModel& model,
                                std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw ConfigError("form_random_array: dimensions must be >= 1");
  model.validate();
  Rng rng(seed);
  Eigen::MatrixXd g(rows, cols);
  // Row-major fill so the stream-to-cell mapping is fixed.
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const bool broke = rng.next_double() < model.p_break;
      if (!broke) {
        g(i, j) = model.g_off;
        continue;
      }
      // Truncated at g_off from below; resample on the (rare) left tail.
      double v;
      do {
        v = model.g_on_mean + model.g_on_std * rng.next_gaussian();
      } while (v < model.g_off);
      g(i, j) = v;
    }
  }
  return CrossbarArray(std::move(g));
}

Eigen::VectorXd quantize_to_codes(const Eigen::VectorXd& x,
                                  const QuantConfig& q,
                                  std::uint64_t* clamped) {
  const double levels = static_cast<double>(q.levels());
  Eigen::VectorXd codes(x.size());
  std::uint64_t clamp_count = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double v = x[j];
    if (v < 0.0) {
      v = 0.0;
      ++clamp_count;
    } else if (v > q.x_max) {
      v = q.x_max;
      ++clamp_count;
    }
    // nearest code, ties round up
    codes[j] = std::floor(v / q.x_max * levels + 0.5);
  }
  if (clamped) *clamped += clamp_count;
  return codes;
}

Eigen::VectorXd analog_vmm(const CrossbarArray& array, const Eigen::VectorXd& x,
                           const QuantConfig& q, double read_noise_std,
                           Rng* noise_rng, VmmStats* stats) {
  if (x.size() != array.cols())
    throw ShapeError("analog_vmm: input length " + std::to_string(x.size()) +
                     " != array cols " + std::to_string(array.cols()));
  q.validate();
  std::uint64_t clamped = 0;
  const Eigen::VectorXd codes = quantize_to_codes(x, q, &clamped);
  const double scale = q.x_max / static_cast<double>(q.levels());
  if (stats) {
    stats->clamped += clamped;
    stats->mac_count +=
        static_cast<std::uint64_t>(array.rows()) *
        static_cast<std::uint64_t>(array.cols());
  }

  if (noise_rng == nullptr || read_noise_std == 0.0) {
    // Bit planes recombine linearly, so the clean read is one matvec.
    return (array.conductance() * codes) * scale;
  }

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(array.rows());
  Eigen::VectorXd mask(x.size());
  for (int k = 0; k < q.m_bits; ++k) {
    const double plane_weight = static_cast<double>(1u << k);
    bool any = false;
    for (Eigen::Index j = 0; j < codes.size(); ++j) {
      const bool bit =
          (static_cast<std::uint64_t>(codes[j]) >> k) & 1ULL;
      mask[j] = bit ? 1.0 : 0.0;
      any |= bit;
    }
    if (!any) continue;
    // currents at v_read, each term G_ij*b_j*v*(1+eps_ij)
    Eigen::VectorXd current = (array.conductance() * mask) * q.v_read;
    Eigen::VectorXd var = (array.conductance_sq() * mask) *
                          (q.v_read * q.v_read * read_noise_std *
                           read_noise_std);
    for (Eigen::Index i = 0; i < current.size(); ++i)
      current[i] += std::sqrt(var[i]) * noise_rng->next_gaussian();
    acc += (current / q.v_read) * plane_weight;
  }
  return acc * scale;
}

double spectral_radius(const Eigen::MatrixXd& m, double scale) {
  if (m.rows() != m.cols())
    throw ShapeError("spectral_radius: matrix is not square");
  const Eigen::Index n = m.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  double lambda = 0.0;
  const int max_iter = 100000;
  const double tol = 1e-8;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = m * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;  // v hit the kernel; dominant value is 0
    const double estimate = norm;  // ||Mv|| with ||v||=1
    w /= norm;
    if (it > 0 && std::abs(estimate - lambda) <= tol * std::abs(estimate)) {
      return estimate * scale;
    }
    lambda = estimate;
    v = std::move(w);
  }
  throw NumericalError(
      "spectral_radius: power iteration did not converge; last iterate " +
      std::to_string(lambda * scale));
}

double spectral_radius(const CrossbarArray& array, double scale) {
  return spectral_radius(array.conductance(), scale);
}

void save_array(const std::filesystem::path& csv_path,
                const CrossbarArray& array, const DeviceModel& model,
                std::uint64_t seed) {
  write_matrix_csv(csv_path, array.conductance());
  json sidecar = {
      {"rows", array.rows()},
      {"cols", array.cols()},
      {"seed", seed},
      {"units", "uS"},
      {"device_model",
       {{"p_break", model.p_break},
        {"g_on_mean", model.g_on_mean},
        {"g_on_std", model.g_on_std},
        {"g_off", model.g_off},
        {"read_noise_std", model.read_noise_std}}},
  };
  std::filesystem::path sidecar_path = csv_path;
  sidecar_path += ".json";
  write_text_file(sidecar_path, sidecar.dump(2) + "\n");
}

CrossbarArray load_array(const std::filesystem::path& csv_path,
                         DeviceModel* model, std::uint64_t* seed) {
  CrossbarArray array(read_matrix_csv(csv_path));
  std::filesystem::path sidecar_path = csv_path;
  sidecar_path += ".json";
  if (std::filesystem::exists(sidecar_path)) {
    const json sidecar = json::parse(read_text_file(sidecar_path));
    if (sidecar.contains("rows") &&
        (sidecar["rows"].get<Eigen::Index>() != array.rows() ||
         sidecar["cols"].get<Eigen::Index>() != array.cols()))
      throw DataError("load_array: sidecar shape disagrees with CSV: " +
                      csv_path.string());
    if (model && sidecar.contains("device_model")) {
      const auto& d = sidecar["device_model"];
      model->p_break = d.value("p_break", model->p_break);
      model->g_on_mean = d.value("g_on_mean", model->g_on_mean);
      model->g_on_std = d.value("g_on_std", model->g_on_std);
      model->g_off = d.value("g_off", model->g_off);
      model->read_noise_std = d.value("read_noise_std", model->read_noise_std);
    }
    if (seed && sidecar.contains("seed"))
      *seed = sidecar["seed"].get<std::uint64_t>();
  }
  return array;
}

}  // namespace esgnn
