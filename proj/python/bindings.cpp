#include "gsnav/bench.hpp"
#include "gsnav/fmm.hpp"
#include "gsnav/kmeans.hpp"
#include "gsnav/reconstruction.hpp"
#include "gsnav/world.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;
using namespace gsnav;

namespace {

template <class T>
py::array_t<T> to_array(const Image<T>& img) {
  std::vector<py::ssize_t> shape = {img.height(), img.width()};
  if (img.channels() > 1) shape.push_back(img.channels());
  py::array_t<T> out(shape);
  std::copy(img.raw().begin(), img.raw().end(), out.mutable_data());
  return out;
}

// Keeps the scene alive for as long as the world refers to it.
struct PyWorld {
  std::shared_ptr<const Scene> scene;
  World world;
  PyWorld(std::shared_ptr<const Scene> s, const Pose& start) : scene(std::move(s)), world(*scene, start) {}
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "gsnav core bindings";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  py::enum_<Action>(m, "Action")
      .value("MOVE_FORWARD", Action::MoveForward)
      .value("TURN_LEFT", Action::TurnLeft)
      .value("TURN_RIGHT", Action::TurnRight)
      .value("LOOK_UP", Action::LookUp)
      .value("LOOK_DOWN", Action::LookDown)
      .value("STOP", Action::Stop);

  py::class_<Pose>(m, "Pose")
      .def(py::init([](double x, double y, double yaw, double pitch) {
             Pose p;
             p.x = x;
             p.y = y;
             p.yaw = yaw;
             p.pitch = pitch;
             return p;
           }),
           py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("yaw") = 0.0, py::arg("pitch") = 0.0)
      .def_readwrite("x", &Pose::x)
      .def_readwrite("y", &Pose::y)
      .def_readwrite("z", &Pose::z)
      .def_readwrite("yaw", &Pose::yaw)
      .def_readwrite("pitch", &Pose::pitch)
      .def("__repr__", [](const Pose& p) {
        return "Pose(x=" + std::to_string(p.x) + ", y=" + std::to_string(p.y) +
               ", yaw=" + std::to_string(p.yaw) + ", pitch=" + std::to_string(p.pitch) + ")";
      });

  py::class_<Scene, std::shared_ptr<Scene>>(m, "Scene")
      .def_readonly("name", &Scene::name)
      .def_property_readonly("objects",
                             [](const Scene& s) {
                               py::list out;
                               for (const auto& o : s.objects) {
                                 py::dict d;
                                 d["id"] = o.id;
                                 d["category"] = o.category;
                                 d["text"] = o.text_description;
                                 d["centroid"] = std::vector<double>(o.centroid.data(), o.centroid.data() + 3);
                                 out.append(d);
                               }
                               return out;
                             })
      .def_property_readonly("rooms",
                             [](const Scene& s) {
                               std::vector<std::string> names;
                               for (const auto& r : s.rooms) names.push_back(r.name);
                               return names;
                             })
      .def("room_index", [](const Scene& s, double x, double y) { return s.room_index({x, y}); });

  m.def("load_scene", [](const std::string& path) { return std::make_shared<Scene>(load_scene(path)); },
        py::arg("path"));

  py::class_<PyWorld>(m, "World")
      .def(py::init<std::shared_ptr<const Scene>, const Pose&>(), py::arg("scene"), py::arg("start"))
      .def_property_readonly("pose", [](const PyWorld& w) { return w.world.pose(); })
      .def("act",
           [](PyWorld& w, Action a) {
             const StepResult r = w.world.act(a);
             return py::make_tuple(r.pose, r.collided);
           })
      .def("observe", [](const PyWorld& w) {
        const Observation o = w.world.observe();
        py::dict d;
        d["rgb"] = to_array(o.rgb);
        d["depth"] = to_array(o.depth);
        d["instance_ids"] = to_array(o.instance_ids);
        return d;
      });

  m.def(
      "fmm_distance",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> passable,
         std::pair<int, int> source, double resolution) {
        if (passable.ndim() != 2) throw ValidationError("passable must be a 2-D array");
        TraversalGrid g;
        g.height = static_cast<int>(passable.shape(0));
        g.width = static_cast<int>(passable.shape(1));
        g.resolution = resolution;
        g.passable.assign(passable.data(), passable.data() + passable.size());
        const DistanceField f = fmm_distance(g, Cell{source.first, source.second});
        py::array_t<double> out({g.height, g.width});
        std::copy(f.values.begin(), f.values.end(), out.mutable_data());
        return out;
      },
      py::arg("passable"), py::arg("source"), py::arg("resolution") = 0.05,
      "Geodesic distance (m) from source (col, row); unreachable cells are inf.");

  m.def("keyframe_probabilities", &keyframe_probabilities, py::arg("psnr"),
        py::arg("eps") = kKeyframeEpsilon);

  m.def(
      "kmeans",
      [](const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iters) {
        KMeansParams p;
        p.k = k;
        p.seed = seed;
        p.max_iters = max_iters;
        const KMeansResult r = kmeans(points, p);
        return py::make_tuple(r.centroids, r.assignment, r.objective);
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iters") = 100,
      "Returns (centroids, assignment, objective history).");

  py::class_<SubtaskResult>(m, "SubtaskResult")
      .def(py::init([](bool success, double path_length, double shortest_path) {
             SubtaskResult r;
             r.success = success;
             r.path_length = path_length;
             r.shortest_path = shortest_path;
             return r;
           }),
           py::arg("success"), py::arg("path_length"), py::arg("shortest_path"))
      .def_readwrite("success", &SubtaskResult::success)
      .def_readwrite("path_length", &SubtaskResult::path_length)
      .def_readwrite("shortest_path", &SubtaskResult::shortest_path)
      .def_readonly("steps", &SubtaskResult::steps);

  m.def("compute_spl", &compute_spl, py::arg("results"));
  m.def("compute_sr", &compute_sr, py::arg("results"));

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("scene_path", &RunConfig::scene_path)
      .def_readwrite("episode_path", &RunConfig::episode_path)
      .def_readwrite("episode_seed", &RunConfig::episode_seed)
      .def_readwrite("n_subtasks", &RunConfig::n_subtasks)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("perception", &RunConfig::perception)
      .def_readwrite("false_positive_rate", &RunConfig::false_positive_rate)
      .def_readwrite("decoy_rate", &RunConfig::decoy_rate)
      .def_readwrite("verify_false_negative", &RunConfig::verify_false_negative)
      .def_readwrite("verify_false_positive", &RunConfig::verify_false_positive)
      .def_readwrite("embedding_dim", &RunConfig::embedding_dim)
      .def_readwrite("map_res", &RunConfig::map_res)
      .def_readwrite("explore_budget", &RunConfig::explore_budget)
      .def_readwrite("frame_stride", &RunConfig::frame_stride)
      .def_readwrite("p1", &RunConfig::p1)
      .def_readwrite("p2", &RunConfig::p2)
      .def_readwrite("lambda_", &RunConfig::lambda)
      .def_readwrite("mu_d", &RunConfig::mu_d)
      .def_readwrite("feature_iters", &RunConfig::feature_iters)
      .def_readwrite("k1", &RunConfig::k1)
      .def_readwrite("k2", &RunConfig::k2)
      .def_readwrite("w_pos", &RunConfig::w_pos)
      .def_readwrite("top_k", &RunConfig::top_k)
      .def_readwrite("tau_seg", &RunConfig::tau_seg)
      .def_readwrite("tau_feat", &RunConfig::tau_feat)
      .def_readwrite("tau_match", &RunConfig::tau_match)
      .def_readwrite("localization_radius", &RunConfig::localization_radius)
      .def_readwrite("step_limit", &RunConfig::step_limit)
      .def_readwrite("ablate_keyframe", &RunConfig::ablate_keyframe)
      .def_readwrite("ablate_verification", &RunConfig::ablate_verification)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def("validate", &RunConfig::validate);

  m.def(
      "run_pipeline",
      [](const RunConfig& cfg, std::function<void(const std::string&)> log) {
        StageLog sink;
        if (log) sink = [&](const std::string& s) {
          py::gil_scoped_acquire gil;
          log(s);
        };
        MetricsReport rep;
        {
          py::gil_scoped_release release;
          rep = run_pipeline(cfg, sink);
        }
        return rep.to_text();
      },
      py::arg("config"), py::arg("log") = nullptr,
      "Runs every stage and returns the metrics report as JSON text.");
}
