#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tdvs/harness.hpp"
#include "tdvs/kinematics.hpp"
#include "tdvs/servo.hpp"

namespace py = pybind11;
using namespace tdvs;

namespace {

ImageBuffer image_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3)
    throw py::value_error("expected an (h, w, 3) float array");
  ImageBuffer img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::copy(arr.data(), arr.data() + arr.size(), img.values.begin());
  return img;
}

py::array_t<float> array_from_image(const ImageBuffer& img) {
  py::array_t<float> arr({img.height, img.width, 3});
  std::copy(img.values.begin(), img.values.end(), arr.mutable_data());
  return arr;
}

// Checkpoint + spec bundled for inference from python.
struct Regressor {
  NetworkSpec spec;
  ParameterSet<float> params;

  Regressor(const std::filesystem::path& checkpoint, int input_size, const std::string& layers)
      : spec(NetworkSpec::from_string(input_size, input_size, layers)),
        params(load_parameters(spec, checkpoint)) {}

  std::array<double, 2> predict(const ImageBuffer& img) const {
    const auto input = preprocess(img, spec.input_w, spec.input_h);
    auto [out, cache] = forward(spec, params, input, 1);
    return {out.v[0], out.v[1]};
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simulation toolkit for deep direct visual servoing of a tendon-driven continuum robot";

  py::class_<RobotGeometry>(m, "RobotGeometry")
      .def(py::init<>())
      .def_readwrite("backbone_length_m", &RobotGeometry::backbone_length_m)
      .def_readwrite("tendon_offset_m", &RobotGeometry::tendon_offset_m)
      .def_readwrite("backbone_radius_m", &RobotGeometry::backbone_radius_m)
      .def_readwrite("youngs_modulus_pa", &RobotGeometry::youngs_modulus_pa)
      .def_readwrite("density_kg_m3", &RobotGeometry::density_kg_m3);

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init<>())
      .def_readwrite("width_px", &CameraIntrinsics::width_px)
      .def_readwrite("height_px", &CameraIntrinsics::height_px)
      .def_readwrite("horizontal_fov_deg", &CameraIntrinsics::horizontal_fov_deg)
      .def("focal_px", &CameraIntrinsics::focal_px);

  py::class_<PlanarScene>(m, "PlanarScene")
      .def(py::init<>())
      .def_readwrite("plane_distance_m", &PlanarScene::plane_distance_m)
      .def_readwrite("plane_halfwidth_m", &PlanarScene::plane_halfwidth_m)
      .def_property(
          "texture", [](const PlanarScene& s) { return array_from_image(s.target_texture); },
          [](PlanarScene& s, const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
            s.target_texture = image_from_array(a);
          })
      .def_property(
          "background",
          [](const PlanarScene& s) {
            return py::make_tuple(s.background[0], s.background[1], s.background[2]);
          },
          [](PlanarScene& s, const std::array<float, 3>& rgb) { s.background = rgb; });

  py::class_<RigidPose>(m, "RigidPose")
      .def(py::init<>())
      .def_readwrite("rotation", &RigidPose::rotation)
      .def_readwrite("translation", &RigidPose::translation);

  m.def(
      "tendons_to_arc",
      [](double q1_mm, double q2_mm, const RobotGeometry& geom) {
        const auto arc = tendons_to_arc({q1_mm, q2_mm}, geom);
        return py::make_tuple(arc.curvature, arc.bending_plane, arc.arc_length);
      },
      py::arg("q1_mm"), py::arg("q2_mm"), py::arg("geometry") = RobotGeometry{},
      "Map tendon displacements (mm) to (curvature 1/m, bending plane rad, arc length m)");

  m.def(
      "forward_kinematics",
      [](double q1_mm, double q2_mm, const RobotGeometry& geom) {
        return forward_kinematics({q1_mm, q2_mm}, geom);
      },
      py::arg("q1_mm"), py::arg("q2_mm"), py::arg("geometry") = RobotGeometry{});

  m.def(
      "spiral_path",
      [](double amplitude_mm, double periods, int samples) {
        const auto path = spiral_path({amplitude_mm, periods, samples});
        py::array_t<double> out({static_cast<py::ssize_t>(path.size()), py::ssize_t(2)});
        auto view = out.mutable_unchecked<2>();
        for (size_t i = 0; i < path.size(); ++i) {
          view(i, 0) = path[i].q1_mm;
          view(i, 1) = path[i].q2_mm;
        }
        return out;
      },
      py::arg("amplitude_mm") = 7.0, py::arg("periods") = 20.0, py::arg("samples") = 5000);

  m.def(
      "label_of",
      [](double q1_mm, double q2_mm, double beta_per_mm) {
        const auto l = label_of({q1_mm, q2_mm}, {beta_per_mm});
        return py::make_tuple(l[0], l[1]);
      },
      py::arg("q1_mm"), py::arg("q2_mm"), py::arg("beta_per_mm") = 1.0);

  m.def(
      "make_procedural_texture",
      [](std::uint64_t seed, int size) { return array_from_image(make_procedural_texture(seed, size)); },
      py::arg("seed"), py::arg("size") = 1024);

  m.def(
      "render",
      [](const PlanarScene& scene, const RigidPose& pose, const CameraIntrinsics& intr) {
        return array_from_image(render(scene, pose, intr));
      },
      py::arg("scene"), py::arg("camera_pose"), py::arg("intrinsics") = CameraIntrinsics{});

  m.def("footprint_width", &footprint_width, py::arg("distance_m"), py::arg("horizontal_fov_deg"));

  m.def(
      "apply_lighting",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img, double gain,
         double gradient) { return array_from_image(apply_lighting(image_from_array(img), gain, gradient)); },
      py::arg("image"), py::arg("gain"), py::arg("gradient") = 0.0);

  m.def(
      "apply_occlusion",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img,
         const std::vector<std::array<int, 4>>& rects) {
        std::vector<PixelRect> r;
        for (const auto& v : rects) r.push_back({v[0], v[1], v[2], v[3]});
        return array_from_image(apply_occlusion(image_from_array(img), r));
      },
      py::arg("image"), py::arg("rects"), "rects are (x, y, w, h) tuples");

  m.def(
      "resize_bilinear",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img, int w, int h) {
        return array_from_image(resize_bilinear(image_from_array(img), w, h));
      },
      py::arg("image"), py::arg("width"), py::arg("height"));

  m.def(
      "normalize_for_sad",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img) {
        return array_from_image(normalize_for_sad(image_from_array(img)));
      },
      py::arg("image"));

  m.def(
      "sad",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<float, py::array::c_style | py::array::forcecast>& b) {
        return sad(image_from_array(a), image_from_array(b));
      },
      py::arg("a"), py::arg("b"), "Sum of absolute differences");

  py::class_<Regressor>(m, "Regressor")
      .def(py::init([](const std::filesystem::path& checkpoint, int input_size,
                       const std::string& layers) {
             return Regressor(checkpoint, input_size, layers);
           }),
           py::arg("checkpoint"), py::arg("input_size") = 64,
           py::arg("layers") = NetworkSpec::desk_reference().to_string())
      .def(
          "predict",
          [](const Regressor& reg,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& img) {
            const auto out = reg.predict(image_from_array(img));
            return py::make_tuple(out[0], out[1]);
          },
          py::arg("image"), "Resize to the network input and return the raw (f1, f2) output");

  m.def("config_schema", [] {
    py::list out;
    for (const auto& k : RunConfig::schema())
      out.append(py::make_tuple(k.name, k.default_value, k.doc));
    return out;
  });

  auto run_cmd = [](int (*fn)(const std::filesystem::path&, const std::filesystem::path&,
                              std::ostream&),
                    const std::filesystem::path& config, const std::filesystem::path& out_dir) {
    std::ostringstream log;
    const int code = fn(config, out_dir, log);
    return py::make_tuple(code, log.str());
  };

  m.def(
      "gen_dataset",
      [run_cmd](const std::filesystem::path& c, const std::filesystem::path& o) {
        return run_cmd(&cmd_gen_dataset, c, o);
      },
      py::arg("config"), py::arg("out"), "Returns (exit_code, log_text)");
  m.def(
      "train",
      [run_cmd](const std::filesystem::path& c, const std::filesystem::path& o) {
        return run_cmd(&cmd_train, c, o);
      },
      py::arg("config"), py::arg("out"), "Returns (exit_code, log_text)");
  m.def(
      "servo",
      [run_cmd](const std::filesystem::path& c, const std::filesystem::path& o) {
        return run_cmd(&cmd_servo, c, o);
      },
      py::arg("config"), py::arg("out"), "Returns (exit_code, log_text)");
  m.def(
      "eval",
      [run_cmd](const std::filesystem::path& c, const std::filesystem::path& o) {
        return run_cmd(&cmd_eval, c, o);
      },
      py::arg("config"), py::arg("out"), "Returns (exit_code, log_text)");

#ifdef TDVS_VERSION_INFO
  m.attr("__version__") = TDVS_VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
