// Python bindings for the core operations: building and running networks,
// checkpoint I/O, the degradation pipeline, and the image-quality metrics.
// Images cross the boundary as 2-D float64 numpy arrays in [0, 1].

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "rednet/data.hpp"
#include "rednet/infer.hpp"
#include "rednet/metrics.hpp"
#include "rednet/network.hpp"
#include "rednet/optim.hpp"
#include "rednet/rng.hpp"

namespace py = pybind11;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

rednet::ImageGray image_from_array(const DoubleArray& arr) {
    if (arr.ndim() != 2) {
        throw rednet::ShapeError("expected a 2-D array, got " + std::to_string(arr.ndim()) +
                                 " dimensions");
    }
    rednet::ImageGray img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::memcpy(img.pix.data(), arr.data(), img.pix.size() * sizeof(double));
    return img;
}

py::array_t<double> array_from_image(const rednet::ImageGray& img) {
    py::array_t<double> arr({img.h, img.w});
    std::memcpy(arr.mutable_data(), img.pix.data(), img.pix.size() * sizeof(double));
    return arr;
}

rednet::Tensor4<float> tensor_from_array(const DoubleArray& arr) {
    const rednet::ImageGray img = image_from_array(arr);
    rednet::Tensor4<float> t(1, 1, img.h, img.w);
    float* p = t.data();
    for (std::size_t i = 0; i < img.pix.size(); ++i) p[i] = static_cast<float>(img.pix[i]);
    return t;
}

}  // namespace

PYBIND11_MODULE(rednet_py, m) {
    m.doc() = "Symmetric conv/deconv image restoration core";

    const auto base = py::register_exception<rednet::Error>(m, "Error");
    py::register_exception<rednet::ShapeError>(m, "ShapeError", base);
    py::register_exception<rednet::GeometryError>(m, "GeometryError", base);
    py::register_exception<rednet::ConfigError>(m, "ConfigError", base);
    py::register_exception<rednet::FormatError>(m, "FormatError", base);
    py::register_exception<rednet::DataError>(m, "DataError", base);
    py::register_exception<rednet::IoError>(m, "IoError", base);

    py::enum_<rednet::SkipStyle>(m, "SkipStyle")
        .value("none", rednet::SkipStyle::none)
        .value("mirrored", rednet::SkipStyle::mirrored)
        .value("sequential", rednet::SkipStyle::sequential);

    py::class_<rednet::REDNetConfig>(m, "Config")
        .def(py::init<>())
        .def_readwrite("conv_layers", &rednet::REDNetConfig::conv_layers)
        .def_readwrite("feature_width", &rednet::REDNetConfig::feature_width)
        .def_readwrite("kernel", &rednet::REDNetConfig::kernel)
        .def_readwrite("stride", &rednet::REDNetConfig::stride)
        .def_readwrite("padding", &rednet::REDNetConfig::padding)
        .def_readwrite("skip_style", &rednet::REDNetConfig::skip_style)
        .def_readwrite("skip_step", &rednet::REDNetConfig::skip_step)
        .def_readwrite("global_input_skip", &rednet::REDNetConfig::global_input_skip)
        .def_readwrite("in_channels", &rednet::REDNetConfig::in_channels)
        .def("total_layers", &rednet::REDNetConfig::total_layers)
        .def("validate", &rednet::REDNetConfig::validate)
        .def_static("red10", &rednet::REDNetConfig::red10)
        .def_static("red20", &rednet::REDNetConfig::red20)
        .def_static("red30", &rednet::REDNetConfig::red30)
        .def("__eq__",
             [](const rednet::REDNetConfig& a, const rednet::REDNetConfig& b) { return a == b; })
        .def("__repr__",
             [](const rednet::REDNetConfig& c) { return rednet::config_to_json(c); });

    py::class_<rednet::Network<float>>(m, "Network")
        .def_static("build", &rednet::Network<float>::build, py::arg("config"),
                    py::arg("seed"))
        .def_property_readonly("config", &rednet::Network<float>::config,
                               py::return_value_policy::copy)
        .def("param_count", &rednet::Network<float>::param_count)
        .def(
            "skip_edges",
            [](const rednet::Network<float>& net) {
                std::vector<std::pair<int, int>> edges;
                for (const auto& e : net.skip_edges()) edges.emplace_back(e.source, e.dest);
                return edges;
            },
            "Additive shortcut edges as (source_layer, dest_layer) pairs")
        .def(
            "forward",
            [](const rednet::Network<float>& net, const DoubleArray& img) {
                const auto out = net.forward(tensor_from_array(img));
                rednet::ImageGray res(out.h(), out.w());
                const float* p = out.plane(0, 0);
                for (std::size_t i = 0; i < res.pix.size(); ++i)
                    res.pix[i] = static_cast<double>(p[i]);
                return array_from_image(res);
            },
            py::arg("image"), "Raw single-image forward pass (no clipping)");

    m.def(
        "restore",
        [](const rednet::Network<float>& net, const DoubleArray& img) {
            return array_from_image(rednet::restore(net, image_from_array(img)));
        },
        py::arg("net"), py::arg("image"),
        "One forward pass over the image, clipped to [0, 1]");
    m.def(
        "restore_ensemble",
        [](const rednet::Network<float>& net, const DoubleArray& img) {
            return array_from_image(rednet::restore_ensemble(net, image_from_array(img)));
        },
        py::arg("net"), py::arg("image"),
        "Average of the 8 dihedral orientations, clipped to [0, 1]");
    m.def("save_checkpoint", &rednet::save_checkpoint, py::arg("net"), py::arg("path"));
    m.def("load_checkpoint", &rednet::load_checkpoint, py::arg("path"));
    m.def("config_to_json", &rednet::config_to_json, py::arg("config"));
    m.def("config_from_json", &rednet::config_from_json, py::arg("text"));

    m.def(
        "psnr",
        [](const DoubleArray& a, const DoubleArray& b, double peak) {
            return rednet::psnr(image_from_array(a), image_from_array(b), peak);
        },
        py::arg("a"), py::arg("b"), py::arg("peak") = 1.0);
    m.def(
        "ssim",
        [](const DoubleArray& a, const DoubleArray& b) {
            return rednet::ssim(image_from_array(a), image_from_array(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "corrupt_gaussian",
        [](const DoubleArray& img, double sigma255, std::uint64_t seed) {
            rednet::Rng rng(seed);
            return array_from_image(
                rednet::corrupt_gaussian(image_from_array(img), sigma255, rng));
        },
        py::arg("image"), py::arg("sigma255"), py::arg("seed"),
        "Add iid Gaussian noise with std-dev sigma255/255 (unclipped)");
    m.def(
        "resize_bicubic",
        [](const DoubleArray& img, int out_h, int out_w) {
            return array_from_image(rednet::resize_bicubic(image_from_array(img), out_h, out_w));
        },
        py::arg("image"), py::arg("out_h"), py::arg("out_w"));
    m.def(
        "degrade_sr",
        [](const DoubleArray& img, int scale) {
            return array_from_image(rednet::degrade_sr(image_from_array(img), scale));
        },
        py::arg("image"), py::arg("scale"),
        "Bicubic down/up round trip at the given scale");

    m.def(
        "mse",
        [](const DoubleArray& pred, const DoubleArray& target) {
            const auto [loss, grad] =
                rednet::mse_loss(tensor_from_array(pred), tensor_from_array(target));
            (void)grad;
            return loss;
        },
        py::arg("pred"), py::arg("target"),
        "Sum of squared differences divided by the batch size (1 here)");

    m.def(
        "load_image",
        [](const std::filesystem::path& path) {
            return array_from_image(rednet::load_image(path));
        },
        py::arg("path"));
    m.def(
        "save_image",
        [](const DoubleArray& img, const std::filesystem::path& path) {
            rednet::save_image(image_from_array(img), path);
        },
        py::arg("image"), py::arg("path"));
}
