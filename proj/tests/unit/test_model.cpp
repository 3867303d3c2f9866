#include "doctest.h"

#include <numeric>

#include "cxrnet/model.hpp"
#include "cxrnet/optim.hpp"
#include "support/gradchecks.hpp"

using namespace cxrnet;
using testing::random_tensor;

namespace {

// Independent count: every parameter tensor's element count, summed.
std::size_t count_elements(const Network<float>& net) {
  std::size_t n = 0;
  for (const Tensor<float>* p : net.parameters()) n += element_count(p->shape());
  return n;
}

}  // namespace

TEST_CASE("default model size and shape trace") {
  const ModelSpec spec;
  Prng prng(0);
  const Network<float> net(spec, prng);
  CHECK(net.parameter_count() == 640u + 73856u + 16777344u + 129u);
  CHECK(count_elements(net) == 16851969u);
  CHECK(spec.flattened_features() == 131072u);

  const std::vector<Shape> trace = spec.shape_trace(3);
  const std::vector<Shape> want{{3, 1, 128, 128}, {3, 64, 128, 128}, {3, 64, 64, 64},
                                {3, 128, 64, 64}, {3, 128, 32, 32}, {3, 131072},
                                {3, 128},         {3, 1}};
  CHECK(trace == want);

  CHECK(net.conv1.weights.shape() == Shape{64, 1, 3, 3});
  CHECK(net.conv2.weights.shape() == Shape{128, 64, 3, 3});
  CHECK(net.hidden.weights.shape() == Shape{131072, 128});
  CHECK(net.output.weights.shape() == Shape{128, 1});
  for (const Tensor<float>* b : {&net.conv1.bias, &net.conv2.bias, &net.hidden.bias,
                                 &net.output.bias}) {
    for (float v : b->data()) CHECK(v == 0.0f);
  }
}

TEST_CASE("spec validation and descriptor round trip") {
  ModelSpec spec = testing::shrunk_spec();
  CHECK_NOTHROW(spec.validate());
  CHECK(ModelSpec::from_json(spec.to_json()) == spec);
  CHECK(ModelSpec::from_json(ModelSpec{}.to_json()) == ModelSpec{});

  ModelSpec bad = spec;
  bad.image_size = 18;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.dropout_rate = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.dense_units = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(ModelSpec::from_json("{"), FormatError);
  CHECK_THROWS_AS(ModelSpec::from_json("{\"image_size\": 16}"), FormatError);
}

TEST_CASE("forward contracts") {
  Prng prng(1);
  ModelSpec spec = testing::shrunk_spec();
  spec.dropout_rate = 0.5;
  const Network<double> net(spec, prng);
  const Tensor<double> x = random_tensor({3, 1, 16, 16}, prng, 0.0, 1.0);

  const Tensor<double> p = net.predict(x);
  CHECK(p.shape() == Shape{3, 1});
  for (double v : p.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(net.predict(x) == p);
  CHECK_FALSE(net.forward(x, Mode::eval).cache.has_value());

  CHECK_THROWS_AS(net.forward(x, Mode::train), StateError);
  Prng dropout(2);
  const ForwardPass<double> pass = net.forward(x, Mode::train, &dropout);
  REQUIRE(pass.cache.has_value());
  CHECK(pass.cache->dropout_mask.shape() == Shape{3, 4});

  CHECK_THROWS_AS(net.predict(random_tensor({3, 1, 8, 8}, prng)), ShapeError);
  CHECK_THROWS_AS(net.predict(random_tensor({3, 2, 16, 16}, prng)), ShapeError);
  CHECK_THROWS_AS(net.backward(net.forward(x, Mode::eval), Tensor<double>({3, 1})),
                  StateError);
}

TEST_CASE("backward contracts") {
  Prng prng(3);
  const Network<double> net(testing::shrunk_spec(), prng);
  const Tensor<double> x = random_tensor({2, 1, 16, 16}, prng, 0.0, 1.0);
  const ForwardPass<double> pass = net.forward(x, Mode::train);
  const auto grads = net.backward(pass, Tensor<double>({2, 1}));
  const auto params = net.parameters();
  REQUIRE(grads.size() == params.size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    CHECK(grads[i].shape() == params[i]->shape());
    for (double v : grads[i].data()) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(net.backward(pass, Tensor<double>({3, 1})), ShapeError);
}

TEST_CASE("composed model gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    const testing::GradCheck r = testing::gradcheck_model(seed);
    CAPTURE(r.worst_relative);
    CHECK(r.ok);
  }
}

TEST_CASE("gradients do not depend on batch order") {
  Prng prng(4);
  const Network<double> net(testing::shrunk_spec(), prng);
  const Tensor<double> x = random_tensor({3, 1, 16, 16}, prng, 0.0, 1.0);
  const Tensor<double> y({3, 1}, {1.0, 0.0, 1.0});

  const std::size_t image = 16 * 16;
  const std::vector<std::size_t> perm{2, 0, 1};
  Tensor<double> xp(x.shape()), yp(y.shape());
  for (std::size_t i = 0; i < 3; ++i) {
    std::copy_n(x.raw() + perm[i] * image, image, xp.raw() + i * image);
    yp[i] = y[perm[i]];
  }

  auto grads_for = [&](const Tensor<double>& in, const Tensor<double>& labels) {
    const ForwardPass<double> pass = net.forward(in, Mode::train);
    return net.backward(pass, bce_loss(pass.probabilities, labels).grad);
  };
  const auto a = grads_for(x, y);
  const auto b = grads_for(xp, yp);
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t i = 0; i < a[t].size(); ++i)
      CHECK(a[t][i] == doctest::Approx(b[t][i]).epsilon(1e-12).scale(1e-12));
}

TEST_CASE("initialization is reproducible") {
  Prng a(9), b(9), c(10);
  const Network<float> n1(testing::shrunk_spec(), a);
  const Network<float> n2(testing::shrunk_spec(), b);
  const Network<float> n3(testing::shrunk_spec(), c);
  CHECK(n1.conv1.weights == n2.conv1.weights);
  CHECK(n1.hidden.weights == n2.hidden.weights);
  CHECK_FALSE(n1.conv1.weights == n3.conv1.weights);
}
