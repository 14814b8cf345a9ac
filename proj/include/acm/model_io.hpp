#pragma once

// JSON (de)serialization of spectral-density models. Schema: an object with
// "kind" plus kind-specific keys; complex scalars are [re, im] pairs and
// matrices are arrays of rows.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "acm/spectral_model.hpp"

namespace acm {

using Json = nlohmann::json;

inline Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("model schema: complex entries are [re, im]");
  return Complex(j[0].get<double>(), j[1].get<double>());
}

inline Json complex_to_json(Complex c) { return Json::array({c.real(), c.imag()}); }

inline CMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("model schema: matrix is an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols)
      throw std::invalid_argument("model schema: ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = complex_from_json(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
  }
  return m;
}

inline Json matrix_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<Complex> complex_list_from_json(const Json& j) {
  std::vector<Complex> out;
  for (const auto& e : j) out.push_back(complex_from_json(e));
  return out;
}

inline SpectralDensityModel model_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument("model schema: expected an object with a \"kind\" key");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "white_noise") return SpectralDensityModel::white_noise(j.at("N").get<Eigen::Index>());
  if (kind == "ma") {
    std::vector<CMatrix> taps;
    for (const auto& t : j.at("taps")) taps.push_back(matrix_from_json(t));
    return SpectralDensityModel::ma(j.at("N").get<Eigen::Index>(), std::move(taps));
  }
  if (kind == "scalar_ma")
    return SpectralDensityModel::scalar_ma(j.at("N").get<Eigen::Index>(),
                                           complex_list_from_json(j.at("taps")));
  if (kind == "toeplitz_ma1")
    return SpectralDensityModel::toeplitz_ma1(
        j.at("N").get<Eigen::Index>(),
        j.contains("symbol_neg") ? complex_list_from_json(j.at("symbol_neg")) : std::vector<Complex>{},
        complex_list_from_json(j.at("symbol_nonneg")));
  if (kind == "block_diag") {
    std::vector<CMatrix> taps;
    for (const auto& t : j.at("taps")) taps.push_back(matrix_from_json(t));
    return SpectralDensityModel::block_diag(j.at("M").get<Eigen::Index>(), taps);
  }
  if (kind == "tabulated") {
    std::vector<CMatrix> coeffs;
    for (const auto& t : j.at("coeffs")) coeffs.push_back(matrix_from_json(t));
    return SpectralDensityModel::tabulated(std::move(coeffs));
  }
  throw std::invalid_argument("model schema: unknown kind \"" + kind + "\"");
}

inline Json model_to_json(const SpectralDensityModel& m) {
  Json j;
  switch (m.kind()) {
    case ModelKind::WhiteNoise:
      j["kind"] = "white_noise";
      j["N"] = m.dim();
      break;
    case ModelKind::MA:
    case ModelKind::ToeplitzMA1:
    case ModelKind::BlockDiag: {
      // All factor-based kinds round-trip through the expanded tap list.
      j["kind"] = "ma";
      j["N"] = m.dim();
      Json taps = Json::array();
      for (const auto& t : m.ma_taps()) taps.push_back(matrix_to_json(t));
      j["taps"] = taps;
      break;
    }
    case ModelKind::Tabulated: {
      j["kind"] = "tabulated";
      Json coeffs = Json::array();
      for (const auto& c : m.fourier_coeffs()) coeffs.push_back(matrix_to_json(c));
      j["coeffs"] = coeffs;
      break;
    }
  }
  return j;
}

inline SpectralDensityModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_model: cannot open " + path);
  Json j;
  f >> j;
  return model_from_json(j);
}

inline void save_model(const std::string& path, const SpectralDensityModel& m) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_model: cannot open " + path);
  f << model_to_json(m).dump(2) << '\n';
}

}  // namespace acm
