#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "artic/model.hpp"

namespace artic {

enum class TensorMode { Speaker, Pose };

// One value per subspace dimensionality, with spread over the cases or
// samples behind it (zero where there is a single case).
struct MetricCurve {
  std::vector<std::size_t> dimension;
  std::vector<double> mean;
  std::vector<double> stddev;
  void validate() const;
};

// Percent of mode variance captured by the d leading components,
// computed from the stored full singular value list; nondecreasing,
// 100 at full rank.
MetricCurve compactness(const MultilinearModel& model, TensorMode mode);

// Leave-one-slice-out reconstruction error: rebuild the model without
// one slice of the chosen mode, fit every held-out mesh through fixed
// full-vertex correspondences inside the h-boxes, and record the mean
// per-vertex distance. hold_in instead fits training members of the
// full model, a floor check. Cases are folds x other-mode size.
MetricCurve generalization(const MeshCollection& collection, TensorMode mode,
                           std::size_t fixed_other, double h, int jobs = 1,
                           bool hold_in = false);

// Mean distance from randomly generated shapes to their closest
// training mesh over the region vertices; the varied mode is truncated
// to each dimensionality, the other mode stays at fixed_other. Draws
// are per-coordinate normal, truncated at three deviations, seeded per
// sample index so any job count reproduces the same values.
MetricCurve specificity(const MultilinearModel& model,
                        const MeshCollection& collection,
                        const std::vector<std::uint32_t>& region,
                        TensorMode mode, std::size_t fixed_other,
                        std::size_t samples, std::uint64_t seed, int jobs = 1);

// Specificity with the pose coordinates frozen to one phone's training
// row; speaker coordinates are sampled and distances are measured only
// against that phone's training meshes.
MetricCurve fixed_phone_specificity(const MultilinearModel& model,
                                    const MeshCollection& collection,
                                    const std::string& phone,
                                    const std::vector<std::uint32_t>& region,
                                    std::size_t samples, std::uint64_t seed,
                                    int jobs = 1);

// dimension,mean,std rows.
void save_curve_csv(const MetricCurve& curve, const std::string& path);
// Whitespace-separated columns with a comment header, plot-ready.
void save_curve_dat(const MetricCurve& curve, const std::string& path);
MetricCurve load_curve_csv(const std::string& path);

}  // namespace artic
