#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "artic/registration.hpp"
#include "artic/synth.hpp"

#include "helpers.hpp"

using namespace artic;

TEST_CASE("axis-angle rotation matches the reference construction") {
  Rng rng(60);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d r(rng.uniform(-2, 2), rng.uniform(-2, 2),
                      rng.uniform(-2, 2));
    const Eigen::Matrix3d want =
        Eigen::AngleAxisd(r.norm(), r.normalized()).toRotationMatrix();
    CHECK((rodrigues(r) - want).norm() < 1e-12);
  }
  CHECK((rodrigues(Eigen::Vector3d::Zero()) - Eigen::Matrix3d::Identity())
            .norm() == 0.0);
  // Series branch near zero stays consistent with the closed form.
  const Eigen::Vector3d tiny(1e-9, -2e-9, 1.5e-9);
  const Eigen::Matrix3d want =
      Eigen::AngleAxisd(tiny.norm(), tiny.normalized()).toRotationMatrix();
  CHECK((rodrigues(tiny) - want).norm() < 1e-15);
}

TEST_CASE("rotation jacobian matches finite differences") {
  Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d r(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                      rng.uniform(-1.5, 1.5));
    Eigen::Matrix3d rot;
    std::array<Eigen::Matrix3d, 3> jac;
    rodrigues_with_jacobian(r, rot, jac);
    CHECK((rot - rodrigues(r)).norm() < 1e-14);
    const double eps = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d hi = r, lo = r;
      hi[k] += eps;
      lo[k] -= eps;
      const Eigen::Matrix3d fd = (rodrigues(hi) - rodrigues(lo)) / (2 * eps);
      CHECK((jac[static_cast<std::size_t>(k)] - fd).norm() < 1e-7);
    }
  }
}

TEST_CASE("rotation jacobian at zero is the cross-product generator") {
  Eigen::Matrix3d rot;
  std::array<Eigen::Matrix3d, 3> jac;
  rodrigues_with_jacobian(Eigen::Vector3d::Zero(), rot, jac);
  for (int k = 0; k < 3; ++k) {
    Eigen::Matrix3d gen = Eigen::Matrix3d::Zero();
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[k] = 1.0;
    gen << 0, -e.z(), e.y(), e.z(), 0, -e.x(), -e.y(), e.x(), 0;
    CHECK((jac[static_cast<std::size_t>(k)] - gen).norm() < 1e-12);
  }
}

TEST_CASE("weight schedule interpolates linearly between endpoints") {
  MatchWeights w;
  CHECK(schedule_weights(w, 1).beta == 10.0);
  CHECK(schedule_weights(w, 40).beta == 6.0);
  CHECK(schedule_weights(w, 20).beta ==
        doctest::Approx(8.051282051282051).epsilon(1e-15));
  CHECK(schedule_weights(w, 20).gamma ==
        doctest::Approx(5.128205128205128).epsilon(1e-15));
  CHECK(schedule_weights(w, 40).gamma == 0.0);
  CHECK(schedule_weights(w, 5).alpha == 1.0);
  CHECK_THROWS(schedule_weights(w, 0));
  CHECK_THROWS(schedule_weights(w, 41));
  MatchWeights single = w;
  single.series_length = 1;
  CHECK(schedule_weights(single, 1).beta == 10.0);
  CHECK(schedule_weights(single, 1).gamma == 10.0);
}

TEST_CASE("candidate search prefers matches below the surface") {
  OrientedPointCloud cloud;
  const Eigen::Vector3d n(0, 0, 1);
  cloud.points = {{0, 0, 1.0}, {0, 0, -2.0}};
  cloud.normals = {n, n};
  const CloudGrid grid(cloud, 4.0);
  const CandidateMatch m =
      grid.find_candidate(Eigen::Vector3d::Zero(), n, 4.0, 60.0);
  REQUIRE(m.valid);
  CHECK(m.point == 1);  // farther but on the inward side
  CHECK(m.side == MatchSide::Below);
  CHECK(m.distance == doctest::Approx(2.0));
}

TEST_CASE("candidate search enforces radius and normal compatibility") {
  OrientedPointCloud cloud;
  cloud.points = {{3.9, 0, 0}, {0, 4.1, 0}};
  const double tilt = 61.0 * 3.14159265358979323846 / 180.0;
  cloud.normals = {Eigen::Vector3d(std::sin(tilt), 0, std::cos(tilt)),
                   Eigen::Vector3d(0, 0, 1)};
  const CloudGrid grid(cloud, 4.0);
  // Point 0 is inside the radius but its normal tilts past the limit;
  // point 1 has a perfect normal but sits outside the radius.
  const CandidateMatch m = grid.find_candidate(
      Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, 1), 4.0, 60.0);
  CHECK_FALSE(m.valid);
  const CandidateMatch ok = grid.find_candidate(
      Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, 1), 4.0, 62.0);
  REQUIRE(ok.valid);
  CHECK(ok.point == 0);
  CHECK_THROWS(grid.find_candidate(Eigen::Vector3d::Zero(),
                                   Eigen::Vector3d(0, 0, 1), 4.2, 60.0));
}

TEST_CASE("candidate ties break toward the smaller point index") {
  OrientedPointCloud cloud;
  const Eigen::Vector3d n(0, 0, 1);
  cloud.points = {{1.0, 0, 0}, {-1.0, 0, 0}};
  cloud.normals = {n, n};
  const CloudGrid grid(cloud, 2.0);
  const CandidateMatch m =
      grid.find_candidate(Eigen::Vector3d::Zero(), n, 2.0, 60.0);
  REQUIRE(m.valid);
  CHECK(m.point == 0);
}

TEST_CASE("deformation field io round-trips bit-exactly") {
  Rng rng(62);
  DeformationField f = DeformationField::identity(17);
  for (auto& r : f.rotations)
    r = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  for (auto& t : f.translations)
    t = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  const std::string path = testutil::temp_path("field.mdef");
  save_field(f, path);
  const DeformationField back = load_field(path);
  REQUIRE(back.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK((back.rotations[i] - f.rotations[i]).norm() == 0.0);
    CHECK((back.translations[i] - f.translations[i]).norm() == 0.0);
  }
  CHECK_THROWS(load_field(testutil::temp_path("missing.mdef")));
}

TEST_CASE("identity field leaves the template in place") {
  const SurfaceMesh mesh = make_closed_surface(5.0, 1, 0.1, 3);
  const auto pos =
      deformed_positions(mesh, DeformationField::identity(mesh.vertices.size()));
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    CHECK((pos[v] - mesh.vertices[v]).norm() == 0.0);
}

TEST_CASE("matching a self-sampled cloud keeps the template still") {
  // Cloud points at the vertices with matching normals: the rest pose
  // already satisfies every correspondence exactly.
  const SurfaceMesh templ = make_closed_surface(10.0, 2, 0.25, 21);
  OrientedPointCloud cloud;
  cloud.points = templ.vertices;
  cloud.normals = vertex_normals(templ);
  MatchWeights w;
  w.series_length = 10;
  const MatchResult res = match_template(templ, cloud, {}, w);
  double displacement = 0.0;
  for (std::size_t v = 0; v < templ.vertices.size(); ++v)
    displacement += (res.mesh.vertices[v] - templ.vertices[v]).norm();
  displacement /= static_cast<double>(templ.vertices.size());
  CHECK(displacement < 1e-3);
  REQUIRE(res.stats.energies.size() == 10);
  REQUIRE(res.stats.mean_residuals.size() == 10);
  CHECK(res.stats.mean_residuals.back() < 1e-6);
  CHECK(res.stats.valid_counts.back() == templ.vertices.size());
}

TEST_CASE("matching lands on a rigidly displaced cloud surface") {
  Rng rng(63);
  const SurfaceMesh templ = make_closed_surface(10.0, 2, 0.15, 3);
  RigidTransform rigid;
  rigid.rotation = testutil::random_rotation(rng, 5.0 * M_PI / 180.0);
  rigid.translation = Eigen::Vector3d(1.0, -1.5, 0.8);
  const SurfaceMesh moved = apply_transform(templ, rigid);
  SynthCloudSpec cloud_spec;
  cloud_spec.density = 4.0;
  cloud_spec.seed = 78;
  const OrientedPointCloud cloud = synth_cloud(moved, cloud_spec);

  SurfaceMesh named = templ;
  named.landmarks["a"] = 0;
  named.landmarks["b"] = 40;
  named.landmarks["c"] = 95;
  named.landmarks["d"] = 150;
  LandmarkSet lms;
  for (const auto& [name, index] : named.landmarks)
    lms.push_back({name, rigid.apply(templ.vertices[index])});

  const MatchResult res = match_template(named, cloud, lms, {});
  // Mean distance to the sampled target surface; tangential sliding of
  // individual vertices along the surface is acceptable.
  double surf = 0.0;
  for (const auto& v : res.mesh.vertices) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : cloud.points) best = std::min(best, (v - q).norm());
    surf += best;
  }
  surf /= static_cast<double>(res.mesh.vertices.size());
  CHECK(surf < 0.5);
}

TEST_CASE("inner minimization never increases the energy") {
  const SurfaceMesh templ = make_closed_surface(6.0, 1, 0.2, 24);
  SynthCloudSpec cloud_spec;
  cloud_spec.density = 3.0;
  cloud_spec.seed = 79;
  OrientedPointCloud cloud = synth_cloud(templ, cloud_spec);
  for (auto& p : cloud.points) p += Eigen::Vector3d(0.4, -0.3, 0.2);
  MatchWeights w;
  w.series_length = 8;
  const MatchResult res = match_template(templ, cloud, {}, w);
  REQUIRE(res.stats.inner_energies.size() == 8);
  for (const auto& trace : res.stats.inner_energies) {
    REQUIRE(!trace.empty());
    for (std::size_t i = 1; i < trace.size(); ++i)
      CHECK(trace[i] <= trace[i - 1]);
  }
}

TEST_CASE("landmark forces pull their vertex to the named target") {
  SurfaceMesh templ = make_closed_surface(8.0, 1, 0.0, 5);
  templ.landmarks["crown"] = 0;
  SynthCloudSpec cloud_spec;
  cloud_spec.density = 3.0;
  const OrientedPointCloud cloud = synth_cloud(templ, cloud_spec);
  LandmarkSet lm;
  const Eigen::Vector3d target =
      templ.vertices[0] + Eigen::Vector3d(0.0, 0.0, 2.0);
  lm.push_back({"crown", target});
  MatchWeights w;
  w.series_length = 10;
  w.gamma = 200.0;
  w.gamma_min = 200.0;
  const MatchResult res = match_template(templ, cloud, lm, w);
  CHECK((res.mesh.vertices[0] - target).norm() < 0.5);
  LandmarkSet unknown;
  unknown.push_back({"nonexistent", target});
  CHECK_THROWS(match_template(templ, cloud, unknown, w));
}
