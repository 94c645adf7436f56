#include "artic/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "artic/fitting.hpp"
#include "artic/hash.hpp"
#include "artic/optim.hpp"
#include "artic/parallel.hpp"
#include "artic/random.hpp"

namespace artic {
namespace {

using nlohmann::json;

Eigen::Vector3d parse_point(const json& node, const std::string& what) {
  if (!node.is_array() || node.size() != 3)
    throw std::runtime_error("markers: " + what + " is not a 3-vector");
  Eigen::Vector3d p;
  for (int k = 0; k < 3; ++k) {
    if (!node[k].is_number())
      throw std::runtime_error("markers: " + what + " has a non-number");
    p[k] = node[k].get<double>();
  }
  return p;
}

// One block of the frame objective:
//   alpha/M * sum ||B x + offset||^2 + beta * sum ((x_i - m_i)/s_i)^2
//   + gamma * ||x - prev||^2
void solve_frame_block(const Eigen::MatrixXd& basis,
                       const Eigen::VectorXd& mean,
                       const std::vector<Eigen::Vector3d>& positions,
                       const std::vector<std::uint32_t>& vertices,
                       double data_weight, double beta,
                       const ModeStatistics& stats, double gamma,
                       const Eigen::VectorXd* prev, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, Eigen::VectorXd& x) {
  const Eigen::Index r = basis.cols();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(r, r);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(r);
  for (std::size_t m = 0; m < positions.size(); ++m) {
    const auto row = static_cast<Eigen::Index>(3) * vertices[m];
    const auto block = basis.middleRows<3>(row);
    const Eigen::Vector3d offset = mean.segment<3>(row) - positions[m];
    hess.noalias() += (2.0 * data_weight) * (block.transpose() * block);
    grad.noalias() += (2.0 * data_weight) * (block.transpose() * offset);
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    const double inv_var = 1.0 / (stats.stddev[i] * stats.stddev[i]);
    hess(i, i) += 2.0 * beta * inv_var;
    grad[i] -= 2.0 * beta * inv_var * stats.mean[i];
  }
  if (prev) {
    for (Eigen::Index i = 0; i < r; ++i) {
      hess(i, i) += 2.0 * gamma;
      grad[i] -= 2.0 * gamma * (*prev)[i];
    }
  }
  solve_box_qp(hess, grad, lo, hi, x);
}

double bias_term(const Eigen::VectorXd& x, const ModeStatistics& stats) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = (x[i] - stats.mean[i]) / stats.stddev[i];
    e += d * d;
  }
  return e;
}

double data_term(const MultilinearModel& model, const Eigen::VectorXd& s,
                 const Eigen::VectorXd& p,
                 const std::vector<Eigen::Vector3d>& positions,
                 const std::vector<std::uint32_t>& vertices) {
  const Eigen::VectorXd v = model.mean + model.core.contract12(s, p);
  double e = 0.0;
  for (std::size_t m = 0; m < positions.size(); ++m)
    e += (v.segment<3>(3 * vertices[m]) - positions[m]).squaredNorm();
  return e / static_cast<double>(positions.size());
}

void check_markers(const MultilinearModel& model,
                   const std::vector<Eigen::Vector3d>& positions,
                   const std::vector<std::uint32_t>& vertices) {
  if (positions.empty())
    throw std::invalid_argument("track: no markers");
  if (positions.size() != vertices.size())
    throw std::invalid_argument("track: marker/vertex count mismatch");
  for (const std::uint32_t v : vertices)
    if (v >= model.vertex_count())
      throw std::invalid_argument("track: vertex index out of range");
  for (const auto& p : positions)
    if (!p.allFinite())
      throw std::invalid_argument("track: non-finite marker position");
}

}  // namespace

void MarkerSequence::validate() const {
  if (markers.empty()) throw std::invalid_argument("markers: empty marker set");
  if (frames.empty()) throw std::invalid_argument("markers: no frames");
  if (times.size() != frames.size())
    throw std::invalid_argument("markers: time/frame count mismatch");
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].size() != markers.size())
      throw std::invalid_argument("markers: frame marker count mismatch");
    for (const auto& p : frames[f])
      if (!p.allFinite())
        throw std::invalid_argument("markers: non-finite position");
    if (f > 0 && !(times[f] > times[f - 1]))
      throw std::invalid_argument("markers: timestamps not increasing");
  }
}

MarkerSequence load_markers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("markers: cannot open: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw std::runtime_error("markers: " + path + ": " + e.what());
  }
  if (!root.is_object() || !root.contains("markers") ||
      !root.contains("frames"))
    throw std::runtime_error("markers: missing markers/frames: " + path);
  MarkerSequence seq;
  for (const auto& name : root["markers"]) {
    if (!name.is_string())
      throw std::runtime_error("markers: non-string name: " + path);
    seq.markers.push_back(name.get<std::string>());
  }
  for (const auto& frame : root["frames"]) {
    if (!frame.is_object() || !frame.contains("t") ||
        !frame.contains("positions"))
      throw std::runtime_error("markers: malformed frame: " + path);
    seq.times.push_back(frame["t"].get<double>());
    std::vector<Eigen::Vector3d> positions;
    for (const auto& node : frame["positions"])
      positions.push_back(parse_point(node, "position"));
    seq.frames.push_back(std::move(positions));
  }
  seq.validate();
  return seq;
}

void save_markers(const MarkerSequence& sequence, const std::string& path) {
  sequence.validate();
  json root;
  root["markers"] = sequence.markers;
  root["frames"] = json::array();
  for (std::size_t f = 0; f < sequence.frames.size(); ++f) {
    json frame;
    frame["t"] = sequence.times[f];
    json positions = json::array();
    for (const auto& p : sequence.frames[f])
      positions.push_back({p.x(), p.y(), p.z()});
    frame["positions"] = std::move(positions);
    root["frames"].push_back(std::move(frame));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("markers: cannot write: " + path);
  out << root.dump(2) << "\n";
}

MarkerCorrespondences load_marker_correspondences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("correspondences: cannot open: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw std::runtime_error("correspondences: " + path + ": " + e.what());
  }
  if (!root.is_object())
    throw std::runtime_error("correspondences: not an object: " + path);
  MarkerCorrespondences corr;
  for (const auto& [name, value] : root.items()) {
    if (!value.is_number_unsigned())
      throw std::runtime_error("correspondences: bad index for " + name);
    corr[name] = value.get<std::uint32_t>();
  }
  if (corr.empty())
    throw std::runtime_error("correspondences: empty: " + path);
  return corr;
}

void save_marker_correspondences(const MarkerCorrespondences& corr,
                                 const std::string& path) {
  json root = json::object();
  for (const auto& [name, vertex] : corr) root[name] = vertex;
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("correspondences: cannot write: " + path);
  out << root.dump(2) << "\n";
}

void TrackConfig::validate(const MultilinearModel& model) const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
    throw std::invalid_argument("track: negative weight");
  if (!(h > 0.0)) throw std::invalid_argument("track: h must be positive");
  if (!(convergence_tolerance >= 0.0))
    throw std::invalid_argument("track: negative tolerance");
  if (max_alternations < 1)
    throw std::invalid_argument("track: max alternations < 1");
  if (mode == AnatomyMode::Fixed &&
      fixed_speaker.size() !=
          static_cast<Eigen::Index>(model.speaker_rank()))
    throw std::invalid_argument("track: fixed anatomy length mismatch");
}

TrackedFrame track_frame(const MultilinearModel& model,
                         const std::vector<Eigen::Vector3d>& positions,
                         const std::vector<std::uint32_t>& vertices,
                         const TrackConfig& config,
                         const TrackedFrame* previous,
                         const TrackedFrame* warm) {
  model.validate();
  config.validate(model);
  check_markers(model, positions, vertices);

  Eigen::VectorXd lo_s, hi_s, lo_p, hi_p;
  coordinate_box(model.speaker_stats, config.h, lo_s, hi_s);
  coordinate_box(model.pose_stats, config.h, lo_p, hi_p);

  const TrackedFrame* seed = warm ? warm : previous;
  Eigen::VectorXd s;
  if (config.mode == AnatomyMode::Fixed) {
    s = config.fixed_speaker;
  } else if (seed) {
    s = clamp_coords(seed->speaker, model.speaker_stats, config.h);
  } else {
    s = model.speaker_stats.mean;
  }
  Eigen::VectorXd p = seed ? clamp_coords(seed->pose, model.pose_stats,
                                          config.h)
                           : Eigen::VectorXd(model.pose_stats.mean);

  const double data_weight =
      config.alpha / static_cast<double>(positions.size());
  const Eigen::VectorXd* prev_p = previous ? &previous->pose : nullptr;
  const Eigen::VectorXd* prev_s =
      previous && config.mode == AnatomyMode::Free ? &previous->speaker
                                                   : nullptr;

  const auto objective = [&](const Eigen::VectorXd& cs,
                             const Eigen::VectorXd& cp) {
    double e = config.alpha * data_term(model, cs, cp, positions, vertices);
    e += config.beta * bias_term(cp, model.pose_stats);
    if (config.mode == AnatomyMode::Free)
      e += config.beta * bias_term(cs, model.speaker_stats);
    if (previous) {
      e += config.gamma * (cp - previous->pose).squaredNorm();
      if (config.mode == AnatomyMode::Free)
        e += config.gamma * (cs - previous->speaker).squaredNorm();
    }
    return e;
  };

  Eigen::MatrixXd basis;
  double energy = std::numeric_limits<double>::infinity();
  for (int step = 0; step < config.max_alternations; ++step) {
    {
      // p block.
      basis.setZero(static_cast<Eigen::Index>(model.core.dim3()),
                    static_cast<Eigen::Index>(model.core.dim2()));
      for (std::size_t b = 0; b < model.core.dim2(); ++b)
        for (std::size_t a = 0; a < model.core.dim1(); ++a) {
          if (s[static_cast<Eigen::Index>(a)] == 0.0) continue;
          basis.col(static_cast<Eigen::Index>(b)) +=
              s[static_cast<Eigen::Index>(a)] * model.core.fibre(a, b);
        }
      solve_frame_block(basis, model.mean, positions, vertices, data_weight,
                        config.beta, model.pose_stats, config.gamma, prev_p,
                        lo_p, hi_p, p);
    }
    if (config.mode == AnatomyMode::Free) {
      basis.setZero(static_cast<Eigen::Index>(model.core.dim3()),
                    static_cast<Eigen::Index>(model.core.dim1()));
      for (std::size_t a = 0; a < model.core.dim1(); ++a)
        for (std::size_t b = 0; b < model.core.dim2(); ++b) {
          if (p[static_cast<Eigen::Index>(b)] == 0.0) continue;
          basis.col(static_cast<Eigen::Index>(a)) +=
              p[static_cast<Eigen::Index>(b)] * model.core.fibre(a, b);
        }
      solve_frame_block(basis, model.mean, positions, vertices, data_weight,
                        config.beta, model.speaker_stats, config.gamma,
                        prev_s, lo_s, hi_s, s);
    }
    const double next = objective(s, p);
    if (energy - next <=
        config.convergence_tolerance * std::max(1.0, std::abs(next))) {
      energy = std::min(energy, next);
      break;
    }
    energy = next;
  }

  TrackedFrame frame;
  frame.speaker = s;
  frame.pose = p;
  frame.energy = objective(s, p);
  const Eigen::VectorXd v = model.mean + model.core.contract12(s, p);
  double residual = 0.0;
  for (std::size_t m = 0; m < positions.size(); ++m)
    residual += (v.segment<3>(3 * vertices[m]) - positions[m]).norm();
  frame.mean_residual = residual / static_cast<double>(positions.size());
  return frame;
}

double track_energy(const MultilinearModel& model,
                    const std::vector<Eigen::Vector3d>& positions,
                    const std::vector<std::uint32_t>& vertices,
                    const TrackConfig& config, const Eigen::VectorXd& s,
                    const Eigen::VectorXd& p, const TrackedFrame* previous) {
  check_markers(model, positions, vertices);
  double e = config.alpha * data_term(model, s, p, positions, vertices);
  e += config.beta * bias_term(p, model.pose_stats);
  e += config.beta * bias_term(s, model.speaker_stats);
  if (previous) {
    e += config.gamma * (p - previous->pose).squaredNorm();
    e += config.gamma * (s - previous->speaker).squaredNorm();
  }
  return e;
}

Trajectory track(const MultilinearModel& model, const MarkerSequence& sequence,
                 const MarkerCorrespondences& corr, const TrackConfig& config) {
  model.validate();
  sequence.validate();
  config.validate(model);
  std::vector<std::uint32_t> vertices;
  vertices.reserve(sequence.markers.size());
  for (const auto& name : sequence.markers) {
    const auto it = corr.find(name);
    if (it == corr.end())
      throw std::invalid_argument("track: no correspondence for marker: " +
                                  name);
    vertices.push_back(it->second);
  }

  Trajectory trajectory;
  trajectory.frames.reserve(sequence.frames.size());
  const TrackedFrame* previous = nullptr;
  for (std::size_t f = 0; f < sequence.frames.size(); ++f) {
    trajectory.frames.push_back(
        track_frame(model, sequence.frames[f], vertices, config, previous));
    previous = &trajectory.frames.back();
  }
  return trajectory;
}

Eigen::VectorXd estimate_anatomy(const Trajectory& trajectory) {
  if (trajectory.frames.empty())
    throw std::invalid_argument("anatomy: empty trajectory");
  Eigen::VectorXd mean =
      Eigen::VectorXd::Zero(trajectory.frames.front().speaker.size());
  for (const auto& frame : trajectory.frames) {
    if (frame.speaker.size() != mean.size())
      throw std::invalid_argument("anatomy: inconsistent trajectory");
    mean += frame.speaker;
  }
  return mean / static_cast<double>(trajectory.frames.size());
}

Eigen::VectorXd normalize_weights(const Eigen::VectorXd& x,
                                  const ModeStatistics& stats) {
  if (x.size() != stats.mean.size())
    throw std::invalid_argument("normalize: length mismatch");
  return (x - stats.mean).cwiseQuotient(stats.stddev);
}

Eigen::VectorXd denormalize_weights(const Eigen::VectorXd& x,
                                    const ModeStatistics& stats) {
  if (x.size() != stats.mean.size())
    throw std::invalid_argument("denormalize: length mismatch");
  return stats.mean + x.cwiseProduct(stats.stddev);
}

std::vector<double> cumulative_fraction(const std::vector<double>& residuals,
                                        const std::vector<double>& thresholds) {
  if (residuals.empty())
    throw std::invalid_argument("curve: no residuals");
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (const double threshold : thresholds) {
    std::size_t count = 0;
    for (const double r : residuals)
      if (r <= threshold) ++count;
    out.push_back(static_cast<double>(count) /
                  static_cast<double>(residuals.size()));
  }
  return out;
}

void CorrespondenceConfig::validate() const {
  if (restarts < 1) throw std::invalid_argument("correspondences: restarts < 1");
  if (!(h > 0.0)) throw std::invalid_argument("correspondences: h <= 0");
  if (!(alpha >= 0.0) || !(beta >= 0.0))
    throw std::invalid_argument("correspondences: negative weight");
  if (max_rounds < 1)
    throw std::invalid_argument("correspondences: max rounds < 1");
  if (jobs < 1) throw std::invalid_argument("correspondences: jobs < 1");
}

CorrespondenceResult estimate_correspondences(
    const MultilinearModel& model, const std::vector<std::string>& names,
    const std::vector<Eigen::Vector3d>& positions,
    const std::vector<std::uint32_t>& mask,
    const CorrespondenceConfig& config) {
  model.validate();
  config.validate();
  if (names.empty() || names.size() != positions.size())
    throw std::invalid_argument("correspondences: marker name/position mismatch");
  if (mask.empty()) throw std::invalid_argument("correspondences: empty mask");
  for (const std::uint32_t v : mask)
    if (v >= model.vertex_count())
      throw std::invalid_argument("correspondences: mask vertex out of range");

  TrackConfig fit;
  fit.alpha = config.alpha;
  fit.beta = config.beta;
  fit.gamma = 0.0;
  fit.h = config.h;
  fit.mode = AnatomyMode::Free;

  const auto nearest_masked = [&](const Eigen::VectorXd& v,
                                  const Eigen::Vector3d& x) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = mask.front();
    for (const std::uint32_t m : mask) {
      const double d = (v.segment<3>(3 * m) - x).squaredNorm();
      if (d < best) {
        best = d;
        arg = m;
      }
    }
    return arg;
  };

  struct Restart {
    std::vector<std::uint32_t> assignment;
    double score = std::numeric_limits<double>::infinity();
  };
  std::vector<Restart> results(config.restarts);

  parallel_for(
      static_cast<std::size_t>(config.restarts), config.jobs,
      [&](std::size_t r) {
        Rng rng(mix_seed(config.seed, r));
        Eigen::VectorXd s(model.speaker_stats.mean.size());
        for (Eigen::Index i = 0; i < s.size(); ++i)
          s[i] = model.speaker_stats.mean[i] +
                 model.speaker_stats.stddev[i] * rng.truncated_normal(config.h);
        Eigen::VectorXd p(model.pose_stats.mean.size());
        for (Eigen::Index i = 0; i < p.size(); ++i)
          p[i] = model.pose_stats.mean[i] +
                 model.pose_stats.stddev[i] * rng.truncated_normal(config.h);

        Eigen::VectorXd v = model.mean + model.core.contract12(s, p);
        std::vector<std::uint32_t> assignment(positions.size());
        for (std::size_t m = 0; m < positions.size(); ++m)
          assignment[m] = nearest_masked(v, positions[m]);

        TrackedFrame warm;
        warm.speaker = s;
        warm.pose = p;
        for (int round = 0; round < config.max_rounds; ++round) {
          const TrackedFrame frame = track_frame(model, positions, assignment,
                                                 fit, nullptr, &warm);
          warm = frame;
          v = model.mean + model.core.contract12(frame.speaker, frame.pose);
          std::vector<std::uint32_t> next(positions.size());
          for (std::size_t m = 0; m < positions.size(); ++m)
            next[m] = nearest_masked(v, positions[m]);
          const bool stable = next == assignment;
          assignment = std::move(next);
          if (stable) break;
        }
        double score = 0.0;
        for (std::size_t m = 0; m < positions.size(); ++m)
          score += (v.segment<3>(3 * assignment[m]) - positions[m]).norm();
        results[r].assignment = std::move(assignment);
        results[r].score = score / static_cast<double>(positions.size());
      });

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r)
    if (results[r].score < results[best].score) best = r;

  CorrespondenceResult out;
  out.score = results[best].score;
  for (std::size_t m = 0; m < names.size(); ++m)
    out.correspondences[names[m]] = results[best].assignment[m];
  return out;
}

}  // namespace artic
