#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hicontour/contour.hpp"
#include "hicontour/dataset_io.hpp"
#include "hicontour/error.hpp"
#include "hicontour/hierarchy.hpp"
#include "hicontour/mask_geometry.hpp"
#include "hicontour/subspace.hpp"

namespace py = pybind11;
using namespace hicontour;

namespace {

BinaryMask mask_from_array(py::array_t<bool, py::array::c_style | py::array::forcecast> arr) {
  if (arr.ndim() != 2) throw py::value_error("mask must be a 2-D array");
  const auto h = static_cast<int>(arr.shape(0));
  const auto w = static_cast<int>(arr.shape(1));
  std::vector<std::uint8_t> bits(arr.data(), arr.data() + arr.size());
  return BinaryMask(w, h, std::move(bits));
}

py::array_t<bool> mask_to_array(const BinaryMask& mask) {
  py::array_t<bool> out({mask.height(), mask.width()});
  auto* dst = out.mutable_data();
  const auto bits = mask.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) dst[i] = bits[i] != 0;
  return out;
}

py::tuple point(const PointR2& p) { return py::make_tuple(p.x, p.y); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hierarchical local-contour encoding, shared low-rank bases and mask metrics";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<BinaryMask>(m, "BinaryMask")
      .def(py::init(&mask_from_array), py::arg("array"))
      .def_property_readonly("width", &BinaryMask::width)
      .def_property_readonly("height", &BinaryMask::height)
      .def_property_readonly("area", [](const BinaryMask& mk) { return area(mk); })
      .def("to_array", &mask_to_array)
      .def("__eq__", [](const BinaryMask& a, const BinaryMask& b) { return a == b; });

  py::class_<EncoderConfig>(m, "EncoderConfig")
      .def(py::init([](double tau, int max_depth, int n_bins, long min_region_area) {
             EncoderConfig c{tau, max_depth, n_bins, min_region_area};
             c.validate();
             return c;
           }),
           py::arg("tau") = 0.9, py::arg("max_depth") = 5, py::arg("n_bins") = kDefaultBins,
           py::arg("min_region_area") = 16)
      .def_readwrite("tau", &EncoderConfig::tau)
      .def_readwrite("max_depth", &EncoderConfig::max_depth)
      .def_readwrite("n_bins", &EncoderConfig::n_bins)
      .def_readwrite("min_region_area", &EncoderConfig::min_region_area);

  py::class_<LocalContour>(m, "LocalContour")
      .def_property_readonly("center", [](const LocalContour& c) { return point(c.center); })
      .def_readonly("radii", &LocalContour::radii);

  py::class_<HierarchicalEncoding>(m, "HierarchicalEncoding")
      .def_readonly("contours", &HierarchicalEncoding::contours)
      .def_readonly("depths", &HierarchicalEncoding::depths)
      .def_readonly("solidities", &HierarchicalEncoding::solidities)
      .def_readonly("width", &HierarchicalEncoding::width)
      .def_readonly("height", &HierarchicalEncoding::height)
      .def("__len__", &HierarchicalEncoding::size)
      .def("radii_matrix", &radii_matrix)
      .def("total_solidity", &total_solidity);

  py::class_<SubspaceBasis>(m, "SubspaceBasis")
      .def_readonly("basis", &SubspaceBasis::basis)
      .def_property_readonly("rank", &SubspaceBasis::rank)
      .def_property_readonly("method", [](const SubspaceBasis& b) { return to_string(b.method); })
      .def_property_readonly("iterations", [](const SubspaceBasis& b) { return b.fit.iterations; })
      .def_property_readonly("objective_trace",
                             [](const SubspaceBasis& b) { return b.fit.objective_trace; });

  m.def("connected_components", &connected_components, py::arg("mask"));
  m.def("solidity", &solidity, py::arg("mask"));
  m.def("distance_transform", [](const BinaryMask& mask) {
    const auto dt = distance_transform(mask);
    py::array_t<double> out({mask.height(), mask.width()});
    std::copy(dt.begin(), dt.end(), out.mutable_data());
    return out;
  }, py::arg("mask"));
  m.def("choose_center", [](const BinaryMask& mask) { return point(choose_center(mask)); },
        py::arg("mask"));
  m.def("sample_polar", [](const BinaryMask& mask, std::pair<double, double> center, int n_bins) {
    return sample_polar(mask, {center.first, center.second}, n_bins);
  }, py::arg("mask"), py::arg("center"), py::arg("n_bins") = kDefaultBins);
  m.def("contour_to_polygon", [](std::pair<double, double> center, std::vector<double> radii) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : contour_to_polygon({{center.first, center.second}, std::move(radii)})) {
      out.emplace_back(p.x, p.y);
    }
    return out;
  }, py::arg("center"), py::arg("radii"));
  m.def("rasterize_polygon", [](const std::vector<std::pair<double, double>>& vertices, int width,
                                int height) {
    Polygon poly;
    for (const auto& [x, y] : vertices) poly.push_back({x, y});
    return rasterize_polygon(poly, width, height);
  }, py::arg("vertices"), py::arg("width"), py::arg("height"));
  m.def("hierarchical_encode", &hierarchical_encode, py::arg("mask"),
        py::arg("config") = EncoderConfig{});
  m.def("reconstruct_mask", py::overload_cast<const HierarchicalEncoding&>(&reconstruct_mask),
        py::arg("encoding"));
  m.def("iou", &iou, py::arg("a"), py::arg("b"));

  m.def("build_contour_matrix", [](const std::vector<HierarchicalEncoding>& encs) {
    auto a = build_contour_matrix(encs);
    return py::make_tuple(a.data, a.object_index);
  }, py::arg("encodings"));
  m.def("svd_basis", py::overload_cast<const Eigen::MatrixXd&, int>(&svd_basis), py::arg("data"),
        py::arg("rank"));
  m.def("fms_basis", [](const Eigen::MatrixXd& data, int rank, double delta, int max_iter, double tol) {
    return fms_basis(data, rank, FmsOptions{delta, max_iter, tol});
  }, py::arg("data"), py::arg("rank"), py::arg("delta") = 1e-10, py::arg("max_iter") = 100,
        py::arg("tol") = 1e-8);
  m.def("project", [](const SubspaceBasis& basis, const HierarchicalEncoding& enc) {
    return project(basis, enc).omega.front();
  }, py::arg("basis"), py::arg("encoding"));
  m.def("reconstruct_radii", [](const SubspaceBasis& basis, const Eigen::MatrixXd& omega, bool clamp) {
    CoefficientSet set;
    set.omega.push_back(omega);
    return reconstruct_radii(basis, set, clamp).front();
  }, py::arg("basis"), py::arg("omega"), py::arg("clamp") = true);
  m.def("with_radii", &with_radii, py::arg("encoding"), py::arg("radii"));
  m.def("effective_rank", py::overload_cast<const Eigen::MatrixXd&>(&effective_rank), py::arg("data"));
  m.def("max_principal_angle", &max_principal_angle, py::arg("a"), py::arg("b"));

  m.def("generate_synthetic", [](const std::string& family, int width, int height, int count,
                                 std::uint64_t seed, int k, double r_in, double r_out) {
    SynthSpec spec;
    spec.family = parse_family(family);
    spec.width = width;
    spec.height = height;
    spec.count = count;
    spec.seed = seed;
    spec.star_points = k;
    spec.r_in = r_in;
    spec.r_out = r_out;
    return generate_synthetic(spec);
  }, py::arg("family"), py::arg("width") = 128, py::arg("height") = 128, py::arg("count") = 1,
        py::arg("seed") = 0, py::arg("k") = 5, py::arg("r_in") = 0.0, py::arg("r_out") = 0.0);
}
