#include "waveletgan/checkpoint.hpp"
#include "waveletgan/dataio.hpp"
#include "waveletgan/fid.hpp"
#include "waveletgan/gan.hpp"
#include "waveletgan/gradcheck.hpp"
#include "waveletgan/rng.hpp"
#include "waveletgan/tensor.hpp"
#include "waveletgan/wavelet.hpp"
#include "waveletgan/wavelet_deconv.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;
using namespace wg;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    std::vector<std::size_t> shape(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[i] = static_cast<std::size_t>(a.shape(i));
    std::vector<double> data(a.data(), a.data() + a.size());
    return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> out(shape);
    std::copy(t.data(), t.data() + t.size(), out.mutable_data());
    return out;
}

fid::GaussianStats stats_from_arrays(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& mu,
    const py::array_t<double, py::array::c_style | py::array::forcecast>& cov) {
    fid::GaussianStats s;
    s.dim = static_cast<std::size_t>(mu.size());
    s.mu.assign(mu.data(), mu.data() + mu.size());
    s.cov.assign(cov.data(), cov.data() + cov.size());
    if (s.cov.size() != s.dim * s.dim) throw ShapeError("cov must be dim x dim");
    return s;
}

// Thin training-oriented wrapper holding a model plus its batch sampler.
struct PyGan {
    gan::GanModel model;
    std::unique_ptr<gan::BatchSampler> sampler;

    explicit PyGan(gan::GanModel m) : model(std::move(m)) {}

    py::list train_steps(const py::array_t<double, py::array::c_style | py::array::forcecast>&
                             images,
                         std::int64_t steps) {
        io::Dataset data;
        data.images = tensor_from_array(images);
        if (!sampler || sampler->size() != data.size())
            sampler = std::make_unique<gan::BatchSampler>(data.size());
        py::list rows;
        for (std::int64_t i = 0; i < steps; ++i) {
            gan::StepMetrics m = gan::train_step(model, data, *sampler);
            py::dict row;
            row["step"] = model.step;
            row["d_loss"] = m.d_loss;
            row["g_loss"] = m.g_loss;
            row["scales"] = m.scales;
            rows.append(std::move(row));
        }
        return rows;
    }

    py::array_t<double> sample(std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return array_from_tensor(gan::sample_images(model, n, rng));
    }

    std::vector<double> scales() const { return model.wavelet_scales(); }
    std::int64_t step() const { return model.step; }
    std::vector<std::string> generator_layers() { return model.generator.describe(); }

    void save(const std::string& path) { io::save_checkpoint(model, path, sampler.get()); }
};

PyGan make_gan(const std::string& variant, std::size_t base_width, std::size_t z_dim,
               bool wavelet, std::size_t wavelet_channels, std::size_t wavelet_k, double sigma,
               std::size_t batch, std::size_t n_disc, double lr, const std::string& loss,
               std::uint64_t seed) {
    gan::ArchConfig cfg;
    if (variant == "mnist28") cfg.variant = gan::Variant::mnist28;
    else if (variant == "rgb32") cfg.variant = gan::Variant::rgb32;
    else throw ConfigError("variant must be mnist28 or rgb32");
    cfg.base_width = base_width;
    cfg.z_dim = z_dim;
    cfg.wavelet_enabled = wavelet;
    cfg.wavelet_channels = wavelet_channels;
    cfg.wavelet_kernel_width = wavelet_k;
    cfg.wavelet_sigma = sigma;
    cfg.batch = batch;
    cfg.n_disc = n_disc;
    cfg.lr = lr;
    if (loss == "hinge") cfg.loss = gan::LossKind::hinge;
    else if (loss == "minimax") cfg.loss = gan::LossKind::minimax;
    else throw ConfigError("loss must be hinge or minimax");
    cfg.seed = seed;
    return PyGan(gan::build_gan(cfg));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "WaveletGAN core: Mexican-hat wavelet deconvolution, GAN training, proxy-FID";

    // wavelet math
    m.def("mexican_hat", &wavelet::mexican_hat, py::arg("t"), py::arg("sigma") = 1.0);
    m.def("mexican_hat_dt", &wavelet::mexican_hat_dt, py::arg("t"), py::arg("sigma") = 1.0);
    m.def("scaled_wavelet", &wavelet::scaled_wavelet, py::arg("t"), py::arg("s"), py::arg("b"),
          py::arg("sigma") = 1.0);
    m.def("sample_kernel", &wavelet::sample_kernel, py::arg("s"), py::arg("kernel_width"),
          py::arg("sigma") = 1.0);
    m.def("sample_kernel_dscale", &wavelet::sample_kernel_dscale, py::arg("s"),
          py::arg("kernel_width"), py::arg("sigma") = 1.0);
    m.def("convolve_same", &wavelet::convolve_same, py::arg("signal"), py::arg("kernel"));

    py::class_<WaveletDeconv>(m, "WaveletDeconv")
        .def(py::init<std::vector<double>, std::size_t, double>(), py::arg("scales"),
             py::arg("kernel_width") = 9, py::arg("sigma") = 1.0)
        .def("forward",
             [](WaveletDeconv& self,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
                 return array_from_tensor(self.forward(tensor_from_array(x)));
             })
        .def("backward",
             [](WaveletDeconv& self,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& g) {
                 return array_from_tensor(self.backward(tensor_from_array(g)));
             })
        .def("apply_scale_update", &WaveletDeconv::apply_scale_update, py::arg("learning_rate"))
        .def_property_readonly("scales", &WaveletDeconv::scales)
        .def_property_readonly("scale_grad", &WaveletDeconv::scale_grad)
        .def("zero_scale_grad", &WaveletDeconv::zero_scale_grad);

    // Frechet machinery
    m.def("extract_features",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& images,
             const std::string& kind, std::uint64_t seed, std::size_t dim) {
              const auto k = kind == "raw_moments" ? fid::ExtractorKind::raw_moments
                                                   : fid::ExtractorKind::frozen_random_conv;
              fid::FeatureExtractor fx(k, seed, dim);
              return array_from_tensor(fx.extract(tensor_from_array(images)));
          },
          py::arg("images"), py::arg("kind") = "frozen_random_conv",
          py::arg("seed") = fid::kDefaultExtractorSeed, py::arg("dim") = 64);
    m.def("fit_gaussian",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& features) {
              fid::GaussianStats s = fid::fit_gaussian(tensor_from_array(features));
              py::array_t<double> mu(static_cast<py::ssize_t>(s.dim));
              std::copy(s.mu.begin(), s.mu.end(), mu.mutable_data());
              py::array_t<double> cov({static_cast<py::ssize_t>(s.dim),
                                       static_cast<py::ssize_t>(s.dim)});
              std::copy(s.cov.begin(), s.cov.end(), cov.mutable_data());
              return py::make_tuple(mu, cov);
          });
    m.def("frechet_distance",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& mu_a,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& cov_a,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& mu_b,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& cov_b) {
              return fid::frechet_distance(stats_from_arrays(mu_a, cov_a),
                                           stats_from_arrays(mu_b, cov_b));
          });
    m.attr("METRIC_LABEL") = fid::kMetricLabel;

    // data
    m.def("synthetic_shapes",
          [](std::size_t n, std::size_t size, std::size_t channels, std::uint64_t seed) {
              io::Dataset d = io::synthetic_shapes(n, size, channels, seed);
              return py::make_tuple(array_from_tensor(d.images), d.labels);
          },
          py::arg("n"), py::arg("size") = 28, py::arg("channels") = 1, py::arg("seed") = 7);
    m.def("load_idx_images", [](const std::string& path) {
        return array_from_tensor(io::load_idx_images(path));
    });
    m.def("load_idx_labels", &io::load_idx_labels);

    // GAN
    py::class_<PyGan>(m, "Gan")
        .def("train_steps", &PyGan::train_steps, py::arg("images"), py::arg("steps"))
        .def("sample", &PyGan::sample, py::arg("n"), py::arg("seed") = 1)
        .def("save", &PyGan::save, py::arg("path"))
        .def_property_readonly("scales", &PyGan::scales)
        .def_property_readonly("step", &PyGan::step)
        .def_property_readonly("generator_layers", &PyGan::generator_layers);
    m.def("build_gan", &make_gan, py::arg("variant") = "mnist28", py::arg("base_width") = 32,
          py::arg("z_dim") = 128, py::arg("wavelet") = true, py::arg("wavelet_channels") = 5,
          py::arg("wavelet_k") = 9, py::arg("sigma") = 1.0, py::arg("batch") = 64,
          py::arg("n_disc") = 5, py::arg("lr") = 2e-4, py::arg("loss") = "hinge",
          py::arg("seed") = 1);
    m.def("load_gan", [](const std::string& path) { return PyGan(io::load_checkpoint(path)); });

    m.def("gradcheck", [](std::uint64_t seed) {
        py::list out;
        for (const auto& r : gradcheck::run_all(seed)) {
            py::dict d;
            d["op"] = r.op;
            d["max_rel_err"] = r.max_rel_err;
            d["tolerance"] = r.tolerance;
            d["pass"] = r.pass;
            out.append(std::move(d));
        }
        return out;
    }, py::arg("seed") = 1234);

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
}
