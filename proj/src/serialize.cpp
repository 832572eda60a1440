#include "mbmrl/serialize.hpp"

#include <stdexcept>

namespace mbmrl {

using nlohmann::json;

json matrix_to_json(const DenseMatrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

DenseMatrix matrix_from_json(const json& j) {
  DenseMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data = j.at("data").get<VecD>();
  if (m.data.size() != m.rows * m.cols)
    throw std::invalid_argument("matrix data size mismatch in checkpoint");
  return m;
}

json net_to_json(const MlpNetwork& net) {
  return json{{"layer_sizes", net.layer_sizes},
              {"hidden_activation", activation_name(net.hidden_activation)},
              {"output_activation", activation_name(net.output_activation)},
              {"params", net.get_params()}};
}

MlpNetwork net_from_json(const json& j) {
  MlpNetwork net(j.at("layer_sizes").get<std::vector<std::size_t>>(),
                 activation_from_name(j.at("hidden_activation").get<std::string>()),
                 activation_from_name(j.at("output_activation").get<std::string>()));
  net.set_params(j.at("params").get<VecD>());
  return net;
}

json adam_to_json(const AdamState& state) {
  return json{{"first_moment", state.first_moment},
              {"second_moment", state.second_moment},
              {"step_count", state.step_count},
              {"learning_rate", state.learning_rate},
              {"beta1", state.beta1},
              {"beta2", state.beta2},
              {"epsilon", state.epsilon}};
}

AdamState adam_from_json(const json& j) {
  AdamState s;
  s.first_moment = j.at("first_moment").get<VecD>();
  s.second_moment = j.at("second_moment").get<VecD>();
  s.step_count = j.at("step_count").get<std::size_t>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  if (s.first_moment.size() != s.second_moment.size())
    throw std::invalid_argument("optimizer moment size mismatch in checkpoint");
  return s;
}

}  // namespace mbmrl
