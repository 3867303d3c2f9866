#include "cxrnet/model.hpp"

#include <nlohmann/json.hpp>

namespace cxrnet {

void ModelSpec::validate() const {
  if (image_size < 4 || image_size % 4 != 0) {
    throw ConfigError("image_size must be a positive multiple of 4, got " +
                      std::to_string(image_size));
  }
  if (conv_filters[0] == 0 || conv_filters[1] == 0 || dense_units == 0) {
    throw ConfigError("filter and unit counts must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
}

std::size_t ModelSpec::flattened_features() const {
  const std::size_t side = image_size / 4;
  return conv_filters[1] * side * side;
}

std::vector<Shape> ModelSpec::shape_trace(std::size_t batch) const {
  const std::size_t s = image_size;
  return {
      {batch, 1, s, s},
      {batch, conv_filters[0], s, s},
      {batch, conv_filters[0], s / 2, s / 2},
      {batch, conv_filters[1], s / 2, s / 2},
      {batch, conv_filters[1], s / 4, s / 4},
      {batch, flattened_features()},
      {batch, dense_units},
      {batch, 1},
  };
}

std::string ModelSpec::to_json() const {
  nlohmann::json j{{"image_size", image_size},
                   {"conv_filters", conv_filters},
                   {"kernel_size", kKernelSize},
                   {"dense_units", dense_units},
                   {"dropout_rate", dropout_rate}};
  return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  ModelSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kernel_size").get<std::size_t>() != kKernelSize) {
      throw FormatError("unsupported kernel size in model descriptor");
    }
    spec.image_size = j.at("image_size").get<std::size_t>();
    spec.conv_filters = j.at("conv_filters").get<std::array<std::size_t, 2>>();
    spec.dense_units = j.at("dense_units").get<std::size_t>();
    spec.dropout_rate = j.at("dropout_rate").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model descriptor: ") + e.what());
  }
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid model descriptor: ") + e.what());
  }
  return spec;
}

namespace {

template <typename T>
void relu_in_place(Tensor<T>& t) {
  for (T& v : t.data()) v = v > T{0} ? v : T{0};
}

template <typename T>
void relu_mask_in_place(const Tensor<T>& activation, Tensor<T>& grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activation[i] > T{0})) grad[i] = T{0};
  }
}

}  // namespace

template <typename T>
Network<T>::Network(const ModelSpec& spec) : spec_(spec) {
  spec_.validate();
  const auto f0 = spec_.conv_filters[0], f1 = spec_.conv_filters[1];
  conv1 = {zeros<T>({f0, 1, kKernelSize, kKernelSize}), zeros<T>({f0})};
  conv2 = {zeros<T>({f1, f0, kKernelSize, kKernelSize}), zeros<T>({f1})};
  hidden = {zeros<T>({spec_.flattened_features(), spec_.dense_units}),
            zeros<T>({spec_.dense_units})};
  output = {zeros<T>({spec_.dense_units, 1}), zeros<T>({1})};
}

template <typename T>
Network<T>::Network(const ModelSpec& spec, Prng& init) : spec_(spec) {
  spec_.validate();
  conv1 = Conv2D<T>::glorot(1, spec_.conv_filters[0], init);
  conv2 = Conv2D<T>::glorot(spec_.conv_filters[0], spec_.conv_filters[1], init);
  hidden = Dense<T>::glorot(spec_.flattened_features(), spec_.dense_units, init);
  output = Dense<T>::glorot(spec_.dense_units, 1, init);
}

template <typename T>
void Network<T>::check_input(const Tensor<T>& batch) const {
  const std::size_t s = spec_.image_size;
  if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != s ||
      batch.dim(3) != s) {
    throw ShapeError("model expects [B,1," + std::to_string(s) + "," +
                     std::to_string(s) + "] input, got " +
                     to_string(batch.shape()));
  }
}

template <typename T>
ForwardPass<T> Network<T>::forward(const Tensor<T>& batch, Mode mode,
                                   Prng* dropout_prng) const {
  check_input(batch);
  const std::size_t b = batch.dim(0);

  Tensor<T> a1 = conv2d_forward(batch, conv1);
  relu_in_place(a1);
  PoolResult<T> p1 = maxpool2x2_forward(a1);
  Tensor<T> a2 = conv2d_forward(p1.output, conv2);
  relu_in_place(a2);
  PoolResult<T> p2 = maxpool2x2_forward(a2);
  Tensor<T> flat = std::move(p2.output).reshaped({b, spec_.flattened_features()});
  Tensor<T> h = dense_forward(flat, hidden);
  relu_in_place(h);

  ForwardPass<T> pass;
  if (mode == Mode::eval) {
    pass.probabilities = sigmoid_forward(dense_forward(h, output));
    return pass;
  }

  if (spec_.dropout_rate > 0.0 && dropout_prng == nullptr) {
    throw StateError("train-mode forward needs a dropout generator");
  }
  Prng unused(0);
  DropoutResult<T> dropped = dropout_forward(
      h, DropoutLayer{spec_.dropout_rate}, Mode::train,
      dropout_prng ? *dropout_prng : unused);
  pass.probabilities = sigmoid_forward(dense_forward(dropped.output, output));

  ForwardCache<T> cache;
  cache.input = batch;
  cache.conv1_act = std::move(a1);
  cache.pool1 = std::move(p1.switches);
  cache.pooled1 = std::move(p1.output);
  cache.conv2_act = std::move(a2);
  cache.pool2 = std::move(p2.switches);
  cache.flat = std::move(flat);
  cache.hidden_act = std::move(h);
  cache.dropout_mask = std::move(dropped.mask);
  cache.dropped = std::move(dropped.output);
  cache.probabilities = pass.probabilities;
  pass.cache = std::move(cache);
  return pass;
}

template <typename T>
Tensor<T> Network<T>::predict(const Tensor<T>& batch) const {
  return forward(batch, Mode::eval).probabilities;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::backward(const ForwardPass<T>& pass,
                                            const Tensor<T>& grad_output) const {
  if (!pass.cache) {
    throw StateError("backward needs the cache of a train-mode forward pass");
  }
  const ForwardCache<T>& c = *pass.cache;
  if (grad_output.shape() != c.probabilities.shape()) {
    throw ShapeError("grad_output " + to_string(grad_output.shape()) +
                     " does not match model output " +
                     to_string(c.probabilities.shape()));
  }

  Tensor<T> g = sigmoid_backward(c.probabilities, grad_output);
  DenseGradients<T> g_out = dense_backward(c.dropped, output, g);
  Tensor<T> g_hidden = dropout_backward(c.dropout_mask, g_out.input);
  relu_mask_in_place(c.hidden_act, g_hidden);
  DenseGradients<T> g_dense = dense_backward(c.flat, hidden, g_hidden);

  Tensor<T> g_pooled2 = std::move(g_dense.input).reshaped(c.pool2.output_shape);
  Tensor<T> g_a2 = maxpool2x2_backward(c.pool2, g_pooled2);
  relu_mask_in_place(c.conv2_act, g_a2);
  ConvGradients<T> g_conv2 = conv2d_backward(c.pooled1, conv2, g_a2);
  Tensor<T> g_a1 = maxpool2x2_backward(c.pool1, g_conv2.input);
  relu_mask_in_place(c.conv1_act, g_a1);
  ConvGradients<T> g_conv1 =
      conv2d_backward(c.input, conv1, g_a1, /*need_input_grad=*/false);

  std::vector<Tensor<T>> grads;
  grads.reserve(8);
  grads.push_back(std::move(g_conv1.weights));
  grads.push_back(std::move(g_conv1.bias));
  grads.push_back(std::move(g_conv2.weights));
  grads.push_back(std::move(g_conv2.bias));
  grads.push_back(std::move(g_dense.weights));
  grads.push_back(std::move(g_dense.bias));
  grads.push_back(std::move(g_out.weights));
  grads.push_back(std::move(g_out.bias));
  return grads;
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::parameters() {
  return {&conv1.weights,  &conv1.bias,  &conv2.weights,  &conv2.bias,
          &hidden.weights, &hidden.bias, &output.weights, &output.bias};
}

template <typename T>
std::vector<const Tensor<T>*> Network<T>::parameters() const {
  return {&conv1.weights,  &conv1.bias,  &conv2.weights,  &conv2.bias,
          &hidden.weights, &hidden.bias, &output.weights, &output.bias};
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t total = 0;
  for (const Tensor<T>* p : parameters()) total += p->size();
  return total;
}

template class Network<float>;
template class Network<double>;

}  // namespace cxrnet
