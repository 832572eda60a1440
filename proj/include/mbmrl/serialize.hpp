#ifndef MBMRL_SERIALIZE_HPP_
#define MBMRL_SERIALIZE_HPP_

#include "json.hpp"
#include "mbmrl/adam.hpp"
#include "mbmrl/mlp.hpp"
#include "mbmrl/tensor.hpp"

namespace mbmrl {

// JSON building blocks shared by the policy and ensemble checkpoints.
// nlohmann emits shortest-round-trip doubles and sorted keys, so emitted
// text is stable and parses back bit-exactly.

nlohmann::json matrix_to_json(const DenseMatrix& m);
DenseMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json net_to_json(const MlpNetwork& net);
MlpNetwork net_from_json(const nlohmann::json& j);

nlohmann::json adam_to_json(const AdamState& state);
AdamState adam_from_json(const nlohmann::json& j);

}  // namespace mbmrl

#endif  // MBMRL_SERIALIZE_HPP_
