#include "rnnserve/rnn.hpp"

#include <json.hpp>

namespace rnnserve {

namespace {

using nlohmann::json;

constexpr const char* kLstmGateNames[4] = {"i", "j", "f", "o"};
constexpr const char* kGruGateNames[3] = {"z", "r", "n"};

template <typename Real, int G>
void fill_random(CellWeightsT<Real, G>& w, std::uint64_t seed) {
  const CellDims& dims = w.dims;
  const double scale = 1.0 / std::sqrt(double(dims.r()));
  SplitMix64 rng(seed);
  for (int g = 0; g < G; ++g) {
    w.w_h[g] = MatrixT<Real>(dims.h, dims.h);
    w.w_x[g] = MatrixT<Real>(dims.h, dims.d);
    w.b[g].assign(size_t(dims.h), Real(0));
    for (auto& v : w.w_h[g].data) v = Real(rng.uniform(-scale, scale));
    for (auto& v : w.w_x[g].data) v = Real(rng.uniform(-scale, scale));
    for (auto& v : w.b[g]) v = Real(rng.uniform(-scale, scale));
  }
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || int(j.size()) != rows)
    throw std::invalid_argument(what + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j[size_t(r)];
    if (!row.is_array() || int(row.size()) != cols)
      throw std::invalid_argument(what + ": row " + std::to_string(r) + " must have " +
                                  std::to_string(cols) + " columns");
    for (int c = 0; c < cols; ++c) m.at(r, c) = row[size_t(c)].get<double>();
  }
  return m;
}

template <int G>
json weights_to_json(const CellWeightsT<double, G>& w, const char* const names[G]) {
  w.validate();
  json j;
  j["kind"] = cell_kind_name(w.dims.kind);
  j["dims"] = {{"h", w.dims.h}, {"d", w.dims.d}, {"t", w.dims.t}};
  json gates = json::array();
  for (int g = 0; g < G; ++g) {
    json jg;
    jg["name"] = names[g];
    jg["w_h"] = matrix_to_json(w.w_h[g]);
    jg["w_x"] = matrix_to_json(w.w_x[g]);
    jg["b"] = w.b[g];
    gates.push_back(std::move(jg));
  }
  j["gates"] = std::move(gates);
  return j;
}

template <int G>
CellWeightsT<double, G> weights_from_json(const json& j, CellKind kind,
                                          const char* const names[G]) {
  if (!j.contains("kind") || j["kind"].get<std::string>() != cell_kind_name(kind))
    throw std::invalid_argument("weight file kind does not match expected cell kind");
  const json& jd = j.at("dims");
  CellWeightsT<double, G> w;
  w.dims = {kind, jd.at("h").get<int>(), jd.at("d").get<int>(), jd.at("t").get<int>()};
  w.dims.validate();
  const json& gates = j.at("gates");
  if (!gates.is_array() || int(gates.size()) != G)
    throw std::invalid_argument("weight file must carry exactly " + std::to_string(G) +
                                " gates");
  for (int g = 0; g < G; ++g) {
    const json& jg = gates[size_t(g)];
    if (jg.at("name").get<std::string>() != names[g])
      throw std::invalid_argument("gate " + std::to_string(g) + " must be named '" +
                                  names[g] + "'");
    w.w_h[g] = matrix_from_json(jg.at("w_h"), w.dims.h, w.dims.h, "w_h");
    w.w_x[g] = matrix_from_json(jg.at("w_x"), w.dims.h, w.dims.d, "w_x");
    w.b[g] = jg.at("b").get<std::vector<double>>();
    if (int(w.b[g].size()) != w.dims.h)
      throw std::invalid_argument("bias gate " + std::to_string(g) +
                                  " must have H entries");
  }
  w.validate();
  return w;
}

template <typename Real, int G>
CellWeightsT<float, G> cast_f32(const CellWeightsT<Real, G>& w) {
  CellWeightsT<float, G> out;
  out.dims = w.dims;
  for (int g = 0; g < G; ++g) {
    out.w_h[g].rows = w.w_h[g].rows;
    out.w_h[g].cols = w.w_h[g].cols;
    out.w_h[g].data.assign(w.w_h[g].data.begin(), w.w_h[g].data.end());
    out.w_x[g].rows = w.w_x[g].rows;
    out.w_x[g].cols = w.w_x[g].cols;
    out.w_x[g].data.assign(w.w_x[g].data.begin(), w.w_x[g].data.end());
    out.b[g].assign(w.b[g].begin(), w.b[g].end());
  }
  return out;
}

}  // namespace

LstmWeights make_random_lstm(const CellDims& dims, std::uint64_t seed) {
  if (dims.kind != CellKind::lstm) throw std::invalid_argument("dims must be lstm");
  dims.validate();
  LstmWeights w;
  w.dims = dims;
  fill_random(w, seed);
  return w;
}

GruWeights make_random_gru(const CellDims& dims, std::uint64_t seed) {
  if (dims.kind != CellKind::gru) throw std::invalid_argument("dims must be gru");
  dims.validate();
  GruWeights w;
  w.dims = dims;
  fill_random(w, seed);
  return w;
}

std::vector<std::vector<double>> make_random_inputs(const CellDims& dims,
                                                    std::uint64_t seed) {
  dims.validate();
  // Offset stream so inputs never reuse the weight stream of the same seed.
  SplitMix64 rng(seed ^ 0xA5C1E5EEDB16B00Bull);
  std::vector<std::vector<double>> xs(size_t(dims.t));
  for (auto& x : xs) {
    x.resize(size_t(dims.d));
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  }
  return xs;
}

LstmWeightsT<float> to_f32(const LstmWeights& w) { return cast_f32(w); }
GruWeightsT<float> to_f32(const GruWeights& w) { return cast_f32(w); }

std::string lstm_to_json(const LstmWeights& w) {
  return weights_to_json<4>(w, kLstmGateNames).dump(2);
}

std::string gru_to_json(const GruWeights& w) {
  return weights_to_json<3>(w, kGruGateNames).dump(2);
}

LstmWeights lstm_from_json(const std::string& text) {
  try {
    return weights_from_json<4>(nlohmann::json::parse(text), CellKind::lstm,
                                kLstmGateNames);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid weight JSON: ") + e.what());
  }
}

GruWeights gru_from_json(const std::string& text) {
  try {
    return weights_from_json<3>(nlohmann::json::parse(text), CellKind::gru,
                                kGruGateNames);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid weight JSON: ") + e.what());
  }
}

}  // namespace rnnserve
