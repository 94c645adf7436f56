#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "artic/diffusion.hpp"
#include "artic/fitting.hpp"
#include "artic/model.hpp"
#include "artic/registration.hpp"
#include "artic/synth.hpp"
#include "artic/tracking.hpp"

namespace {

using namespace artic;

const SurfaceMesh& bench_surface() {
  static const SurfaceMesh mesh = make_closed_surface(10.0, 2, 0.15, 7);
  return mesh;
}

const SynthModelResult& bench_model() {
  static const SynthModelResult result = [] {
    SynthModelSpec spec;
    return synth_model(bench_surface(), spec);
  }();
  return result;
}

void BM_Hosvd(benchmark::State& state) {
  const MeshCollection& collection = bench_model().collection;
  const TrainingTensor tensor = build_tensor(collection);
  for (auto _ : state)
    benchmark::DoNotOptimize(hosvd(tensor, collection));
}
BENCHMARK(BM_Hosvd)->Unit(benchmark::kMillisecond);

void BM_DiffusionStep(benchmark::State& state) {
  SynthVolumeSpec spec;
  spec.noise_sigma = 10.0;
  const GrayVolume v = synth_volume(bench_surface(), spec);
  DiffusionConfig cfg;
  cfg.steps = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(denoise_eed(v, cfg));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(v.voxel_count()));
}
BENCHMARK(BM_DiffusionStep)->Unit(benchmark::kMillisecond);

void BM_CandidateSearch(benchmark::State& state) {
  const SurfaceMesh mesh = make_closed_surface(10.0, 3, 0.15, 7);
  SynthCloudSpec spec;
  spec.density = 4.0;
  const OrientedPointCloud cloud = synth_cloud(mesh, spec);
  const CloudGrid grid(cloud, 4.0);
  const std::vector<Eigen::Vector3d> normals = vertex_normals(mesh);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        grid.find_candidate(mesh.vertices[i], normals[i], 4.0, 60.0));
    i = (i + 1) % mesh.vertex_count();
  }
}
BENCHMARK(BM_CandidateSearch);

void BM_MatchSeriesStep(benchmark::State& state) {
  const SurfaceMesh& templ = bench_surface();
  SynthCloudSpec spec;
  spec.density = 2.0;
  OrientedPointCloud cloud = synth_cloud(templ, spec);
  for (auto& p : cloud.points) p += Eigen::Vector3d(0.5, -0.3, 0.2);
  MatchWeights weights;
  weights.series_length = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(match_template(templ, cloud, {}, weights));
}
BENCHMARK(BM_MatchSeriesStep)->Unit(benchmark::kMillisecond);

void BM_FitRound(benchmark::State& state) {
  const MultilinearModel& model = bench_model().model;
  SynthCloudSpec spec;
  spec.density = 2.0;
  const OrientedPointCloud cloud =
      synth_cloud(*bench_model().collection.cells[1][2], spec);
  FitConfig cfg;
  cfg.series = 1;
  cfg.alternations = 2;
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_model(model, cloud, {}, cfg));
}
BENCHMARK(BM_FitRound)->Unit(benchmark::kMillisecond);

void BM_TrackFrame(benchmark::State& state) {
  const MultilinearModel& model = bench_model().model;
  const std::vector<std::uint32_t> vertices = {0, 40, 80, 120, 160};
  const SurfaceMesh mean_mesh =
      generate(model, model.speaker_stats.mean, model.pose_stats.mean);
  std::vector<Eigen::Vector3d> positions;
  for (const auto v : vertices) positions.push_back(mean_mesh.vertices[v]);
  TrackConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(track_frame(model, positions, vertices, cfg));
}
BENCHMARK(BM_TrackFrame);

}  // namespace

BENCHMARK_MAIN();
