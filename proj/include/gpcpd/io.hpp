#pragma once

#include "gpcpd/tensor.hpp"

#include <nlohmann/json.hpp>
#include <string>

namespace gpcpd {

/// {"dims":[n1,n2,n3],"data":[[re,im],...]} with i3 running fastest.
nlohmann::json tensor_to_json(const Tensor3& t);
Tensor3 tensor_from_json(const nlohmann::json& j);

/// Row-major [[[re,im],...],...].
nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j);

/// {"rank":r,"U1":...,"U2":...,"U3":...}
nlohmann::json factors_to_json(const FactorTriple& f);
FactorTriple factors_from_json(const nlohmann::json& j);

/// File helpers; any IO or format problem throws ParseError.
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);
Tensor3 read_tensor(const std::string& path);
void write_tensor(const std::string& path, const Tensor3& t);
FactorTriple read_factors(const std::string& path);
void write_factors(const std::string& path, const FactorTriple& f);

} // namespace gpcpd
