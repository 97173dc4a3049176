#include "gpcpd/io.hpp"

#include "gpcpd/errors.hpp"

#include <fstream>

namespace gpcpd {

using nlohmann::json;

namespace {

json scalar(cplx z) { return json::array({z.real(), z.imag()}); }

cplx parse_scalar(const json& j) {
  if (j.is_number())
    return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError("expected a complex entry [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace

json tensor_to_json(const Tensor3& t) {
  json data = json::array();
  for (const cplx& z : t.data())
    data.push_back(scalar(z));
  return {{"dims", {t.dim(0), t.dim(1), t.dim(2)}}, {"data", std::move(data)}};
}

Tensor3 tensor_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dims") || !j.contains("data"))
    throw ParseError("tensor: missing \"dims\" or \"data\"");
  const json& d = j.at("dims");
  if (!d.is_array() || d.size() != 3)
    throw ParseError("tensor: \"dims\" must have three entries");
  std::array<Index, 3> n{};
  for (std::size_t m = 0; m < 3; ++m) {
    if (!d[m].is_number_integer() || d[m].get<long long>() < 1)
      throw ParseError("tensor: dims must be positive integers");
    n[m] = d[m].get<Index>();
  }
  const json& data = j.at("data");
  if (!data.is_array() || static_cast<Index>(data.size()) != n[0] * n[1] * n[2])
    throw ParseError("tensor: \"data\" length does not match dims");
  std::vector<cplx> v;
  v.reserve(data.size());
  for (const json& e : data)
    v.push_back(parse_scalar(e));
  return Tensor3(n[0], n[1], n[2], std::move(v));
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k)
      row.push_back(scalar(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError("matrix: expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Mat m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ParseError("matrix: ragged rows");
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Index>(i), static_cast<Index>(k)) = parse_scalar(j[i][k]);
  }
  return m;
}

json factors_to_json(const FactorTriple& f) {
  return {{"rank", f.rank()}, {"U1", matrix_to_json(f.U1)}, {"U2", matrix_to_json(f.U2)}, {"U3", matrix_to_json(f.U3)}};
}

FactorTriple factors_from_json(const json& j) {
  if (!j.is_object() || !j.contains("U1") || !j.contains("U2") || !j.contains("U3"))
    throw ParseError("factors: missing U1/U2/U3");
  FactorTriple f{matrix_from_json(j.at("U1")), matrix_from_json(j.at("U2")), matrix_from_json(j.at("U3"))};
  if (j.contains("rank") && j.at("rank") != f.rank())
    throw ParseError("factors: \"rank\" disagrees with the column count");
  if (f.U2.cols() != f.rank() || f.U3.cols() != f.rank())
    throw ParseError("factors: column counts differ");
  return f;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out)
    throw ParseError("cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out)
    throw ParseError("write failed for " + path);
}

Tensor3 read_tensor(const std::string& path) {
  try {
    return tensor_from_json(read_json_file(path));
  } catch (const StructuralError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_tensor(const std::string& path, const Tensor3& t) { write_json_file(path, tensor_to_json(t)); }

FactorTriple read_factors(const std::string& path) { return factors_from_json(read_json_file(path)); }

void write_factors(const std::string& path, const FactorTriple& f) { write_json_file(path, factors_to_json(f)); }

} // namespace gpcpd
