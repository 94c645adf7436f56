#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "artic/fitting.hpp"
#include "artic/synth.hpp"

#include "helpers.hpp"

using namespace artic;

namespace {

SynthModelResult small_model(std::uint64_t seed = 71) {
  const SurfaceMesh templ = make_closed_surface(10.0, 1, 0.2, 11);
  SynthModelSpec spec;
  spec.speakers = 5;
  spec.poses = 4;
  spec.speaker_rank = 3;
  spec.pose_rank = 2;
  spec.amplitude = 2.0;
  spec.seed = seed;
  return synth_model(templ, spec);
}

Eigen::VectorXd draw_in_box(const ModeStatistics& stats, double h, Rng& rng) {
  Eigen::VectorXd x(stats.mean.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    x[i] = stats.mean[i] + stats.stddev[i] * rng.uniform(-h, h);
  return x;
}

std::vector<Eigen::Vector3d> mesh_targets(const SurfaceMesh& mesh) {
  return mesh.vertices;
}

}  // namespace

TEST_CASE("coordinate boxes are centered on the statistics") {
  ModeStatistics stats;
  stats.mean = Eigen::Vector2d(1.0, -2.0);
  stats.stddev = Eigen::Vector2d(0.5, 2.0);
  Eigen::VectorXd lo, hi;
  coordinate_box(stats, 2.0, lo, hi);
  CHECK(lo[0] == 0.0);
  CHECK(hi[0] == 2.0);
  CHECK(lo[1] == -6.0);
  CHECK(hi[1] == 2.0);
  const Eigen::VectorXd clamped =
      clamp_coords(Eigen::Vector2d(5.0, -10.0), stats, 2.0);
  CHECK(clamped[0] == 2.0);
  CHECK(clamped[1] == -6.0);
}

TEST_CASE("canonical rescaling preserves the generated shape") {
  const SynthModelResult synth = small_model();
  const MultilinearModel& model = synth.model;
  Rng rng(81);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd s = draw_in_box(model.speaker_stats, 1.0, rng);
    Eigen::VectorXd p = draw_in_box(model.pose_stats, 1.0, rng);
    Eigen::VectorXd s2 = s, p2 = p;
    canonical_rescale(s2, p2, model.speaker_stats, model.pose_stats, 2.0);
    // Same outer product: the generated meshes agree.
    const SurfaceMesh a = generate(model, s, p);
    const SurfaceMesh b = generate(model, s2, p2);
    for (std::size_t v = 0; v < a.vertices.size(); ++v)
      CHECK((a.vertices[v] - b.vertices[v]).norm() < 1e-9);

    // The normalized objective never got worse.
    const auto objective = [&](const Eigen::VectorXd& sv,
                               const Eigen::VectorXd& pv) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < sv.size(); ++i) {
        const double z = (sv[i] - model.speaker_stats.mean[i]) /
                         model.speaker_stats.stddev[i];
        acc += z * z;
      }
      for (Eigen::Index j = 0; j < pv.size(); ++j) {
        const double z = (pv[j] - model.pose_stats.mean[j]) /
                         model.pose_stats.stddev[j];
        acc += z * z;
      }
      return acc;
    };
    CHECK(objective(s2, p2) <= objective(s, p) + 1e-9);
  }
}

TEST_CASE("canonical rescaling is idempotent on the orbit") {
  const SynthModelResult synth = small_model();
  const MultilinearModel& model = synth.model;
  Rng rng(82);
  const Eigen::VectorXd s = draw_in_box(model.speaker_stats, 0.8, rng);
  const Eigen::VectorXd p = draw_in_box(model.pose_stats, 0.8, rng);
  Eigen::VectorXd s1 = s, p1 = p;
  canonical_rescale(s1, p1, model.speaker_stats, model.pose_stats, 2.0);
  // A rescaled copy of the same pair lands on the same representative.
  Eigen::VectorXd s2 = 1.3 * s, p2 = p / 1.3;
  canonical_rescale(s2, p2, model.speaker_stats, model.pose_stats, 2.0);
  CHECK((s1 - s2).norm() < 1e-6 * std::max(1.0, s1.norm()));
  CHECK((p1 - p2).norm() < 1e-6 * std::max(1.0, p1.norm()));
}

TEST_CASE("landmark names resolve against the template table") {
  std::map<std::string, std::uint32_t> table = {{"tip", 5}, {"back", 9}};
  LandmarkSet lm;
  lm.push_back({"back", {1, 2, 3}});
  const IndexedLandmarks resolved = resolve_landmarks(table, lm);
  REQUIRE(resolved.size() == 1);
  CHECK(resolved[0].first == 9);
  CHECK((resolved[0].second - Eigen::Vector3d(1, 2, 3)).norm() == 0.0);
  lm.push_back({"unknown", {0, 0, 0}});
  CHECK_THROWS(resolve_landmarks(table, lm));
}

TEST_CASE("fixed-correspondence fits recover known coordinates") {
  // Truncated to the generating ranks: a full-rank model keeps dead
  // directions whose coordinates no fit can identify.
  const SynthModelResult synth = small_model(73);
  const MultilinearModel model = truncate(synth.model, 3, 2);
  Rng rng(83);
  FitConfig cfg;
  cfg.h = 2.0;
  cfg.gamma = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd s0 = draw_in_box(model.speaker_stats, 1.0, rng);
    Eigen::VectorXd p0 = draw_in_box(model.pose_stats, 1.0, rng);
    const SurfaceMesh truth = generate(model, s0, p0);
    const FitResult fit = fit_fixed(model, mesh_targets(truth), {}, cfg);
    canonical_rescale(s0, p0, model.speaker_stats, model.pose_stats, cfg.h);
    // The outer product is invariant under a joint sign flip, so the
    // representative is pinned only up to (-s, -p).
    const double direct = (fit.speaker - s0).norm() + (fit.pose - p0).norm();
    const double flipped = (fit.speaker + s0).norm() + (fit.pose + p0).norm();
    CHECK(std::min(direct, flipped) < 1e-3 * (s0.norm() + p0.norm()));

    Eigen::VectorXd lo, hi;
    coordinate_box(model.speaker_stats, cfg.h, lo, hi);
    for (Eigen::Index i = 0; i < fit.speaker.size(); ++i) {
      CHECK(fit.speaker[i] >= lo[i]);
      CHECK(fit.speaker[i] <= hi[i]);
    }
    coordinate_box(model.pose_stats, cfg.h, lo, hi);
    for (Eigen::Index j = 0; j < fit.pose.size(); ++j) {
      CHECK(fit.pose[j] >= lo[j]);
      CHECK(fit.pose[j] <= hi[j]);
    }
  }
}

TEST_CASE("fixed-correspondence fit energies never increase") {
  const SynthModelResult synth = small_model(74);
  const MultilinearModel& model = synth.model;
  Rng rng(84);
  const Eigen::VectorXd s0 = draw_in_box(model.speaker_stats, 2.0, rng);
  const Eigen::VectorXd p0 = draw_in_box(model.pose_stats, 2.0, rng);
  SurfaceMesh noisy = generate(model, s0, p0);
  for (auto& v : noisy.vertices)
    v += 0.3 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  FitConfig cfg;
  cfg.h = 2.0;
  cfg.rescale = false;
  const FitResult fit = fit_fixed(model, mesh_targets(noisy), {}, cfg);
  REQUIRE(fit.energies.size() >= 2);
  for (std::size_t k = 1; k < fit.energies.size(); ++k)
    CHECK(fit.energies[k] <= fit.energies[k - 1] + 1e-9);
}

TEST_CASE("subset fits only see the selected vertices") {
  const SynthModelResult synth = small_model(75);
  const MultilinearModel& model = synth.model;
  Rng rng(85);
  const Eigen::VectorXd s0 = draw_in_box(model.speaker_stats, 1.0, rng);
  const Eigen::VectorXd p0 = draw_in_box(model.pose_stats, 1.0, rng);
  const SurfaceMesh truth = generate(model, s0, p0);
  std::vector<std::uint32_t> subset;
  std::vector<Eigen::Vector3d> targets;
  for (std::uint32_t v = 0; v < truth.vertices.size(); v += 3) {
    subset.push_back(v);
    targets.push_back(truth.vertices[v]);
  }
  FitConfig cfg;
  cfg.h = 2.0;
  const FitResult fit = fit_fixed(model, targets, subset, cfg);
  const SurfaceMesh got = generate(model, fit.speaker, fit.pose);
  double err = 0.0;
  for (const std::uint32_t v : subset)
    err += (got.vertices[v] - truth.vertices[v]).norm();
  CHECK(err / static_cast<double>(subset.size()) < 1e-6);
  CHECK_THROWS(fit_fixed(model, targets, {}, cfg));  // count mismatch
}

TEST_CASE("cloud fits land on the sampled surface") {
  const SynthModelResult synth = small_model(76);
  const MultilinearModel& model = synth.model;
  Rng rng(86);
  const Eigen::VectorXd s0 = draw_in_box(model.speaker_stats, 1.0, rng);
  const Eigen::VectorXd p0 = draw_in_box(model.pose_stats, 1.0, rng);
  const SurfaceMesh truth = generate(model, s0, p0);
  SynthCloudSpec cloud_spec;
  cloud_spec.density = 4.0;
  cloud_spec.seed = 55;
  const OrientedPointCloud cloud = synth_cloud(truth, cloud_spec);
  FitConfig cfg;
  cfg.h = 2.0;
  const FitResult fit = fit_model(model, cloud, {}, cfg);
  double err = 0.0;
  for (std::size_t v = 0; v < truth.vertices.size(); ++v)
    err += (fit.mesh.vertices[v] - truth.vertices[v]).norm();
  err /= static_cast<double>(truth.vertices.size());
  CHECK(err < 0.5);
  // The residual floor is the cloud's sampling granularity, not the
  // mesh error.
  CHECK(fit.mean_residual < 0.5);
  CHECK(fit.used_count > 0);

  const FitResult again = fit_model(model, cloud, {}, cfg);
  CHECK((again.speaker - fit.speaker).norm() == 0.0);
  CHECK((again.pose - fit.pose).norm() == 0.0);
}

TEST_CASE("single-mode fits freeze the pose coordinates") {
  const SynthModelResult synth = small_model(77);
  const MultilinearModel& model = synth.model;
  const SurfaceMesh truth =
      generate(model, model.speaker_modes.row(1), model.pose_modes.row(2));
  SynthCloudSpec cloud_spec;
  cloud_spec.density = 3.0;
  const OrientedPointCloud cloud = synth_cloud(truth, cloud_spec);
  FitConfig cfg;
  cfg.h = 2.0;
  const FitResult fit = fit_pca(model, cloud, {}, cfg);
  CHECK((fit.pose - model.pose_stats.mean).norm() == 0.0);
}

TEST_CASE("bootstrap refines correspondences over the corpus") {
  const SurfaceMesh templ = make_closed_surface(10.0, 1, 0.2, 13);
  SynthModelSpec spec;
  spec.speakers = 3;
  spec.poses = 2;
  spec.speaker_rank = 2;
  spec.pose_rank = 1;
  spec.amplitude = 1.5;
  spec.seed = 99;
  const MeshCollection truth = synth_collection(templ, spec);

  std::vector<BootstrapInput> inputs;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      BootstrapInput input;
      input.speaker = i;
      input.pose = j;
      SynthCloudSpec cloud_spec;
      cloud_spec.density = 3.0;
      cloud_spec.seed = 100 + 10 * i + j;
      input.cloud = synth_cloud(*truth.cells[i][j], cloud_spec);
      inputs.push_back(std::move(input));
    }

  BootstrapConfig cfg;
  cfg.match.series_length = 8;
  cfg.fit.h = 2.0;
  cfg.iterations = 2;
  cfg.jobs = 2;
  const BootstrapResult res =
      bootstrap(templ, truth.speakers, truth.poses, inputs, cfg);
  REQUIRE(res.collection.complete());
  REQUIRE(res.iteration_residuals.size() == 2);
  CHECK(res.iteration_residuals.back() < 1.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double err = 0.0;
      for (std::size_t v = 0; v < templ.vertices.size(); ++v)
        err += (res.collection.cells[i][j]->vertices[v] -
                truth.cells[i][j]->vertices[v])
                   .norm();
      err /= static_cast<double>(templ.vertices.size());
      CHECK(err < 1.0);
    }

  BootstrapConfig dup = cfg;
  std::vector<BootstrapInput> twice = inputs;
  twice.push_back(inputs.front());
  CHECK_THROWS(bootstrap(templ, truth.speakers, truth.poses, twice, dup));
}
