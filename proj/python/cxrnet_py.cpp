#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cxrnet/checkpoint.hpp"
#include "cxrnet/cli.hpp"
#include "cxrnet/image.hpp"
#include "cxrnet/metrics.hpp"

namespace py = pybind11;
using namespace cxrnet;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
Tensor<T> to_tensor(const Array<T>& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  if (shape.empty()) shape = {1};
  Tensor<T> t(shape);
  std::copy(a.data(), a.data() + a.size(), t.raw());
  return t;
}

template <typename T>
py::array_t<T> to_array(const Tensor<T>& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<T> out(shape);
  std::copy(t.raw(), t.raw() + t.size(), out.mutable_data());
  return out;
}

std::vector<double> as_scores(const Array<double>& a) { return {a.data(), a.data() + a.size()}; }
std::vector<int> as_labels(const Array<int>& a) { return {a.data(), a.data() + a.size()}; }

py::tuple curve_tuple(const Curve& c) {
  py::array_t<double> points({static_cast<py::ssize_t>(c.points.size()), py::ssize_t{3}});
  auto p = points.mutable_unchecked<2>();
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const auto r = static_cast<py::ssize_t>(i);
    p(r, 0) = c.points[i].threshold;
    p(r, 1) = c.points[i].x;
    p(r, 2) = c.points[i].y;
  }
  return py::make_tuple(points, c.auc);
}

// Owns a float network; the checkpoint path is the usual way in.
class Model {
 public:
  Model(std::size_t image_size, std::array<std::size_t, 2> filters, std::size_t dense_units,
        double dropout, std::uint64_t seed)
      : net_(make(image_size, filters, dense_units, dropout, seed)) {}
  explicit Model(Network<float> net) : net_(std::move(net)) {}

  static Model load(const std::filesystem::path& path) {
    return Model(load_checkpoint(path).model);
  }
  void save(const std::filesystem::path& path) const {
    save_checkpoint(path, net_, nullptr, 0, 0);
  }
  py::array_t<float> predict(const Array<float>& batch) const {
    const Tensor<float> x = to_tensor(batch);
    Tensor<float> p;
    {
      py::gil_scoped_release release;
      p = net_.predict(x);
    }
    return to_array(p);
  }
  const Network<float>& net() const { return net_; }

 private:
  static Network<float> make(std::size_t image_size, std::array<std::size_t, 2> filters,
                             std::size_t dense_units, double dropout, std::uint64_t seed) {
    ModelSpec spec;
    spec.image_size = image_size;
    spec.conv_filters = filters;
    spec.dense_units = dense_units;
    spec.dropout_rate = dropout;
    Prng init = Prng::derive(seed, {0x696e6974});
    return Network<float>(spec, init);
  }

  Network<float> net_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pneumonia classifier core";
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<LayoutError>(m, "LayoutError", base.ptr());
  py::register_exception<DecodeError>(m, "DecodeError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def(
      "conv2d_forward",
      [](const Array<double>& x, const Array<double>& w, const Array<double>& b) {
        return to_array(conv2d_forward(to_tensor(x), Conv2D<double>{to_tensor(w), to_tensor(b)}));
      },
      py::arg("input"), py::arg("weights"), py::arg("bias"),
      "3x3 same-padding convolution. input [B,C,H,W], weights [O,C,3,3], bias [O].");

  m.def(
      "preprocess",
      [](const std::filesystem::path& path, std::size_t size) {
        return to_array(preprocess(path, size));
      },
      py::arg("path"), py::arg("size") = 128,
      "Decode, convert to grayscale, resize and scale to [0, 1].");

  py::class_<Model>(m, "Model")
      .def(py::init<std::size_t, std::array<std::size_t, 2>, std::size_t, double, std::uint64_t>(),
           py::arg("image_size") = 128, py::arg("conv_filters") = std::array<std::size_t, 2>{64, 128},
           py::arg("dense_units") = 128, py::arg("dropout") = 0.5, py::arg("seed") = 0)
      .def_static("load", &Model::load, py::arg("path"))
      .def("save", &Model::save, py::arg("path"))
      .def("predict", &Model::predict, py::arg("batch"),
           "Eval-mode probabilities for a [B,1,S,S] batch, shape [B,1].")
      .def_property_readonly("image_size", [](const Model& s) { return s.net().spec().image_size; })
      .def_property_readonly("parameter_count",
                             [](const Model& s) { return s.net().parameter_count(); });

  m.def(
      "confusion_at_threshold",
      [](const Array<double>& scores, const Array<int>& labels, double threshold) {
        const auto s = as_scores(scores);
        const auto y = as_labels(labels);
        const ConfusionMatrix cm = confusion_at_threshold(s, y, threshold);
        py::dict d;
        d["tn"] = cm.tn;
        d["fp"] = cm.fp;
        d["fn"] = cm.fn;
        d["tp"] = cm.tp;
        d["accuracy"] = cm.accuracy();
        return d;
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);

  m.def(
      "roc_curve",
      [](const Array<double>& scores, const Array<int>& labels) {
        return curve_tuple(roc_curve_auc(as_scores(scores), as_labels(labels)));
      },
      py::arg("scores"), py::arg("labels"),
      "Returns (points, auc); points rows are (threshold, fpr, tpr).");

  m.def(
      "pr_curve",
      [](const Array<double>& scores, const Array<int>& labels) {
        return curve_tuple(pr_curve_auc(as_scores(scores), as_labels(labels)));
      },
      py::arg("scores"), py::arg("labels"),
      "Returns (points, auc); points rows are (threshold, recall, precision).");

  m.def(
      "average_precision",
      [](const Array<double>& scores, const Array<int>& labels) {
        return average_precision(as_scores(scores), as_labels(labels));
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process: (exit code, stdout, stderr).");
}
