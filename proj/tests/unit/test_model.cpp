#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "artic/model.hpp"
#include "artic/random.hpp"
#include "artic/synth.hpp"

#include "helpers.hpp"

using namespace artic;

namespace {

MeshCollection random_collection(std::size_t speakers, std::size_t poses,
                                 std::size_t vertices, Rng& rng) {
  MeshCollection c;
  for (std::size_t i = 0; i < speakers; ++i)
    c.speakers.push_back("s" + std::to_string(i));
  for (std::size_t j = 0; j < poses; ++j)
    c.poses.push_back("p" + std::to_string(j));
  SurfaceMesh proto;
  proto.vertices.resize(vertices);
  for (std::size_t v = 0; v + 2 < vertices; ++v)
    proto.faces.push_back({static_cast<std::uint32_t>(v),
                           static_cast<std::uint32_t>(v + 1),
                           static_cast<std::uint32_t>(v + 2)});
  c.cells.assign(speakers, std::vector<std::optional<SurfaceMesh>>(poses));
  for (std::size_t i = 0; i < speakers; ++i)
    for (std::size_t j = 0; j < poses; ++j) {
      SurfaceMesh m = proto;
      for (auto& v : m.vertices)
        v = Eigen::Vector3d(rng.uniform(-5, 5), rng.uniform(-5, 5),
                            rng.uniform(-5, 5));
      c.cells[i][j] = std::move(m);
    }
  return c;
}

// Largest principal angle between the column spans of two orthonormal
// bases, from the singular values of their cross-Gram matrix.
double principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b);
  const double c = svd.singularValues().minCoeff();
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace

TEST_CASE("centered tensor sums to zero and matches the serialized meshes") {
  Rng rng(40);
  const MeshCollection c = random_collection(4, 3, 30, rng);
  const TrainingTensor t = build_tensor(c);
  REQUIRE(t.data.dim1() == 4);
  REQUIRE(t.data.dim2() == 3);
  REQUIRE(t.data.dim3() == 90);
  for (std::size_t l = 0; l < 90; ++l) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 3; ++j) sum += t.data(i, j, l);
    CHECK(std::abs(sum) < 1e-9);
  }
  const Eigen::VectorXd coords = serialize(*c.cells[2][1]);
  for (std::size_t l = 0; l < 90; ++l)
    CHECK(t.data(2, 1, l) + t.mean[static_cast<Eigen::Index>(l)] ==
          doctest::Approx(coords[static_cast<Eigen::Index>(l)])
              .epsilon(1e-12));
}

TEST_CASE("decomposition reconstructs the training tensor exactly") {
  Rng rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const MeshCollection c = random_collection(5, 4, 40, rng);
    const TrainingTensor t = build_tensor(c);
    const MultilinearModel model = hosvd(t, c);

    CHECK((model.speaker_modes.transpose() * model.speaker_modes -
           Eigen::MatrixXd::Identity(5, 5))
              .norm() < 1e-9);
    CHECK((model.pose_modes.transpose() * model.pose_modes -
           Eigen::MatrixXd::Identity(4, 4))
              .norm() < 1e-9);

    const Tensor3 rebuilt =
        model.core.mode_multiply(1, model.speaker_modes)
            .mode_multiply(2, model.pose_modes);
    double err = 0.0, norm = 0.0;
    for (std::size_t idx = 0; idx < t.data.size(); ++idx) {
      const double d = rebuilt.data()[idx] - t.data.data()[idx];
      err += d * d;
      norm += t.data.data()[idx] * t.data.data()[idx];
    }
    CHECK(std::sqrt(err / norm) < 1e-9);
  }
}

TEST_CASE("mode subspaces match direct unfolding factorizations") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const MeshCollection c = random_collection(6, 4, 25, rng);
    const TrainingTensor t = build_tensor(c);
    const MultilinearModel model = hosvd(t, c);
    for (int mode = 1; mode <= 2; ++mode) {
      const Eigen::MatrixXd u = mode == 1 ? model.speaker_modes
                                          : model.pose_modes;
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.data.unfold(mode),
                                                  Eigen::ComputeThinU);
      REQUIRE(svd.matrixU().cols() == u.cols());
      for (Eigen::Index k = 1; k <= u.cols(); ++k)
        CHECK(principal_angle(svd.matrixU().leftCols(k), u.leftCols(k)) <
              1e-6);
      const Eigen::VectorXd& stored = mode == 1 ? model.speaker_singular_values
                                                : model.pose_singular_values;
      REQUIRE(stored.size() == u.cols());
      for (Eigen::Index k = 0; k < stored.size(); ++k)
        CHECK(stored[k] ==
              doctest::Approx(svd.singularValues()[k]).epsilon(1e-8));
    }
  }
}

TEST_CASE("sign convention puts each column's largest entry positive") {
  Rng rng(43);
  const MeshCollection c = random_collection(5, 4, 20, rng);
  const MultilinearModel model = hosvd(build_tensor(c), c);
  for (const Eigen::MatrixXd* u : {&model.speaker_modes, &model.pose_modes})
    for (Eigen::Index col = 0; col < u->cols(); ++col) {
      Eigen::Index arg = 0;
      u->col(col).cwiseAbs().maxCoeff(&arg);
      CHECK((*u)(arg, col) >= 0.0);
    }
}

TEST_CASE("training cells are reproduced from their coordinate rows") {
  Rng rng(44);
  const SurfaceMesh tongue = make_tongue_template();
  SynthModelSpec spec;
  spec.speakers = 6;
  spec.poses = 5;
  spec.speaker_rank = 3;
  spec.pose_rank = 2;
  const SynthModelResult synth = synth_model(tongue, spec);
  const MultilinearModel full =
      hosvd(build_tensor(synth.collection), synth.collection);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const SurfaceMesh got = generate(full, full.speaker_modes.row(
                                                 static_cast<Eigen::Index>(i)),
                                       full.pose_modes.row(
                                           static_cast<Eigen::Index>(j)));
      const SurfaceMesh& want = *synth.collection.cells[i][j];
      double worst = 0.0;
      for (std::size_t v = 0; v < want.vertices.size(); ++v)
        worst = std::max(worst,
                         (got.vertices[v] - want.vertices[v]).norm());
      CHECK(worst < 1e-6);
    }
}

TEST_CASE("mode statistics are column means and sample deviations") {
  Rng rng(45);
  const MeshCollection c = random_collection(5, 4, 15, rng);
  const MultilinearModel model = hosvd(build_tensor(c), c);
  for (Eigen::Index k = 0; k < model.speaker_modes.cols(); ++k) {
    const double mean = model.speaker_modes.col(k).mean();
    CHECK(model.speaker_stats.mean[k] == doctest::Approx(mean).epsilon(1e-12));
    const double var =
        (model.speaker_modes.col(k).array() - mean).square().sum() /
        static_cast<double>(model.speaker_modes.rows() - 1);
    CHECK(model.speaker_stats.stddev[k] ==
          doctest::Approx(std::max(std::sqrt(var), 1e-12)).epsilon(1e-9));
  }
}

TEST_CASE("truncation keeps leading columns and re-slices statistics") {
  Rng rng(46);
  const MeshCollection c = random_collection(6, 5, 12, rng);
  const MultilinearModel model = hosvd(build_tensor(c), c);
  const MultilinearModel small = truncate(model, 3, 2);
  CHECK(small.speaker_rank() == 3);
  CHECK(small.pose_rank() == 2);
  CHECK((small.speaker_modes - model.speaker_modes.leftCols(3)).norm() == 0.0);
  CHECK((small.pose_modes - model.pose_modes.leftCols(2)).norm() == 0.0);
  CHECK(small.speaker_stats.mean.size() == 3);
  CHECK(small.speaker_singular_values.size() ==
        model.speaker_singular_values.size());
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t l = 0; l < 5; ++l)
        CHECK(small.core(a, b, l) == model.core(a, b, l));
}

TEST_CASE("model container io round-trips bit-exactly") {
  Rng rng(47);
  const MeshCollection c = random_collection(4, 3, 18, rng);
  const MultilinearModel model = hosvd(build_tensor(c), c);
  const std::string path = testutil::temp_path("model.mltm");
  save_model(model, path);
  const MultilinearModel back = load_model(path);
  CHECK((back.mean - model.mean).norm() == 0.0);
  CHECK((back.speaker_modes - model.speaker_modes).norm() == 0.0);
  CHECK((back.pose_modes - model.pose_modes).norm() == 0.0);
  CHECK((back.speaker_singular_values - model.speaker_singular_values)
            .norm() == 0.0);
  CHECK(back.core.data() == model.core.data());
  CHECK(back.faces == model.faces);
  CHECK((back.speaker_stats.mean - model.speaker_stats.mean).norm() == 0.0);
  CHECK((back.pose_stats.stddev - model.pose_stats.stddev).norm() == 0.0);
}

TEST_CASE("collection manifests round-trip through a directory") {
  Rng rng(48);
  MeshCollection c = random_collection(3, 2, 10, rng);
  c.cells[1][1].reset();
  const std::string dir = testutil::temp_path("collection");
  const std::string manifest = dir + "/manifest.json";
  save_collection(c, dir, manifest);
  const MeshCollection back = load_collection(manifest);
  CHECK(back.speakers == c.speakers);
  CHECK(back.poses == c.poses);
  CHECK_FALSE(back.cells[1][1].has_value());
  REQUIRE(back.cells[2][1].has_value());
  for (std::size_t v = 0; v < 10; ++v)
    CHECK((back.cells[2][1]->vertices[v] - c.cells[2][1]->vertices[v])
              .norm() == 0.0);
}

TEST_CASE("missing cells are filled from speaker and pose means") {
  Rng rng(49);
  MeshCollection c = random_collection(3, 3, 8, rng);
  const MeshCollection original = c;
  c.cells[0][1].reset();
  const MeshCollection filled = complete_missing(c);
  REQUIRE(filled.complete());

  Eigen::VectorXd speaker_mean = Eigen::VectorXd::Zero(24);
  speaker_mean += serialize(*original.cells[0][0]);
  speaker_mean += serialize(*original.cells[0][2]);
  speaker_mean /= 2.0;
  Eigen::VectorXd pose_mean = Eigen::VectorXd::Zero(24);
  pose_mean += serialize(*original.cells[1][1]);
  pose_mean += serialize(*original.cells[2][1]);
  pose_mean /= 2.0;
  const Eigen::VectorXd expected = 0.5 * (speaker_mean + pose_mean);
  CHECK((serialize(*filled.cells[0][1]) - expected).norm() < 1e-12);
  // Observed cells pass through untouched.
  CHECK((serialize(*filled.cells[2][2]) -
         serialize(*original.cells[2][2]))
            .norm() == 0.0);

  MeshCollection empty_speaker = random_collection(2, 2, 8, rng);
  empty_speaker.cells[0][0].reset();
  empty_speaker.cells[0][1].reset();
  CHECK_THROWS(complete_missing(empty_speaker));
}
