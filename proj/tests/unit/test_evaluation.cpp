#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>

#include "artic/evaluation.hpp"
#include "artic/fitting.hpp"
#include "artic/hash.hpp"
#include "artic/model.hpp"
#include "artic/random.hpp"
#include "artic/synth.hpp"

#include "helpers.hpp"

using namespace artic;

namespace {

SynthModelResult corpus(std::uint64_t seed = 101) {
  const SurfaceMesh templ = make_closed_surface(10.0, 1, 0.2, 15);
  SynthModelSpec spec;
  spec.speakers = 6;
  spec.poses = 5;
  spec.speaker_rank = 3;
  spec.pose_rank = 2;
  spec.amplitude = 2.0;
  spec.seed = seed;
  return synth_model(templ, spec);
}

}  // namespace

TEST_CASE("compactness reaches one hundred percent at the true rank") {
  const SynthModelResult synth = corpus();
  const MetricCurve speaker = compactness(synth.model, TensorMode::Speaker);
  REQUIRE(speaker.dimension.size() == 6);
  CHECK(speaker.dimension.front() == 1);
  CHECK(speaker.dimension.back() == 6);
  for (std::size_t k = 1; k < speaker.mean.size(); ++k)
    CHECK(speaker.mean[k] >= speaker.mean[k - 1] - 1e-12);
  CHECK(speaker.mean[2] == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(speaker.mean.back() == doctest::Approx(100.0).epsilon(1e-12));

  const MetricCurve pose = compactness(synth.model, TensorMode::Pose);
  REQUIRE(pose.dimension.size() == 5);
  CHECK(pose.mean[1] == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("generalization drops to zero above the true rank") {
  // Box half-width 4: a tighter box can clamp a held-out coordinate
  // and leave a spurious residual right at the rank threshold.
  const SynthModelResult synth = corpus(102);
  const MetricCurve curve =
      generalization(synth.collection, TensorMode::Speaker, 2, 4.0, 2);
  REQUIRE(curve.dimension.size() == 5);  // folds - 1
  for (std::size_t k = 1; k < curve.mean.size(); ++k)
    CHECK(curve.mean[k] <= curve.mean[k - 1] + 1e-9);
  CHECK(curve.mean[2] < 1e-3);
  CHECK(curve.mean.back() < 1e-3);
  CHECK(curve.mean.front() > curve.mean.back());
}

TEST_CASE("held-in fits sit near the floor at full rank") {
  const SynthModelResult synth = corpus(103);
  const MetricCurve curve = generalization(synth.collection,
                                           TensorMode::Pose, 3, 2.0, 2, true);
  REQUIRE(curve.dimension.size() == 5);  // hold_in keeps every fold
  CHECK(curve.mean.back() < 1e-6);
}

TEST_CASE("generalization is deterministic across job counts") {
  const SynthModelResult synth = corpus(104);
  const MetricCurve a =
      generalization(synth.collection, TensorMode::Pose, 2, 2.0, 1);
  const MetricCurve b =
      generalization(synth.collection, TensorMode::Pose, 2, 2.0, 4);
  REQUIRE(a.mean.size() == b.mean.size());
  for (std::size_t k = 0; k < a.mean.size(); ++k) {
    CHECK(a.mean[k] == b.mean[k]);
    CHECK(a.stddev[k] == b.stddev[k]);
  }
}

TEST_CASE("specificity matches an independent exhaustive oracle") {
  const SynthModelResult synth = corpus(105);
  const MultilinearModel& model = synth.model;
  std::vector<std::uint32_t> region;
  for (std::uint32_t v = 0; v < model.vertex_count(); v += 2)
    region.push_back(v);
  const std::size_t samples = 10;
  const std::uint64_t seed = 77;

  const MetricCurve curve = specificity(model, synth.collection, region,
                                        TensorMode::Speaker, 2, samples, seed);
  REQUIRE(curve.dimension.size() == model.speaker_rank());

  // Independent reimplementation from the documented contract: one rng
  // per (dimension, sample), truncated three-deviation draws, and an
  // exhaustive closest-training-mesh scan over the region vertices.
  for (std::size_t d = 1; d <= model.speaker_rank(); ++d) {
    const MultilinearModel trunc = truncate(model, d, 2);
    double acc = 0.0;
    for (std::size_t n = 0; n < samples; ++n) {
      Rng rng(mix_seed(seed, (d - 1) * samples + n));
      Eigen::VectorXd s(trunc.speaker_stats.mean.size());
      for (Eigen::Index i = 0; i < s.size(); ++i)
        s[i] = trunc.speaker_stats.mean[i] +
               trunc.speaker_stats.stddev[i] * rng.truncated_normal(3.0);
      Eigen::VectorXd p(trunc.pose_stats.mean.size());
      for (Eigen::Index j = 0; j < p.size(); ++j)
        p[j] = trunc.pose_stats.mean[j] +
               trunc.pose_stats.stddev[j] * rng.truncated_normal(3.0);
      const SurfaceMesh sample = generate(trunc, s, p);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
          const SurfaceMesh& train = *synth.collection.cells[i][j];
          double mean_dist = 0.0;
          for (const std::uint32_t v : region)
            mean_dist += (sample.vertices[v] - train.vertices[v]).norm();
          mean_dist /= static_cast<double>(region.size());
          best = std::min(best, mean_dist);
        }
      acc += best;
    }
    CHECK(curve.mean[d - 1] ==
          doctest::Approx(acc / static_cast<double>(samples)).epsilon(1e-9));
  }
}

TEST_CASE("sampled metrics are bit-identical for any job count") {
  const SynthModelResult synth = corpus(106);
  std::vector<std::uint32_t> region;
  for (std::uint32_t v = 0; v < synth.model.vertex_count(); ++v)
    region.push_back(v);
  const MetricCurve a = specificity(synth.model, synth.collection, region,
                                    TensorMode::Pose, 3, 24, 5, 1);
  const MetricCurve b = specificity(synth.model, synth.collection, region,
                                    TensorMode::Pose, 3, 24, 5, 8);
  REQUIRE(a.mean.size() == b.mean.size());
  for (std::size_t k = 0; k < a.mean.size(); ++k) {
    CHECK(a.mean[k] == b.mean[k]);
    CHECK(a.stddev[k] == b.stddev[k]);
  }
}

TEST_CASE("phone-locked specificity compares only that phone's meshes") {
  const SynthModelResult synth = corpus(107);
  std::vector<std::uint32_t> region = {0, 5, 11, 17};
  const MetricCurve curve = fixed_phone_specificity(
      synth.model, synth.collection, "pose02", region, 6, 13);
  REQUIRE(curve.dimension.size() == synth.model.speaker_rank());
  for (const double m : curve.mean) CHECK(std::isfinite(m));
  CHECK_THROWS(fixed_phone_specificity(synth.model, synth.collection,
                                       "no-such-phone", region, 4, 13));
}

TEST_CASE("curve files round-trip through csv and dat stays readable") {
  MetricCurve curve;
  curve.dimension = {1, 2, 3};
  curve.mean = {2.5, 1.25, 0.625};
  curve.stddev = {0.5, 0.25, 0.125};
  const std::string csv = testutil::temp_path("curve.csv");
  save_curve_csv(curve, csv);
  const MetricCurve back = load_curve_csv(csv);
  CHECK(back.dimension == curve.dimension);
  CHECK(back.mean == curve.mean);
  CHECK(back.stddev == curve.stddev);

  const std::string dat = testutil::temp_path("curve.dat");
  save_curve_dat(curve, dat);
  std::ifstream in(dat);
  std::string header;
  std::getline(in, header);
  CHECK(header.substr(0, 1) == "#");
  std::size_t d = 0;
  double m = 0.0, s = 0.0;
  in >> d >> m >> s;
  CHECK(d == 1);
  CHECK(m == 2.5);
  CHECK(s == 0.5);
}
